//! Load a JSON config, plan the schedule, simulate, and write the trace CSV.
//!
//! cargo run --example config_experiment -- configs/ring6.json trace.csv

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use drls::commands::{simulate_lines, trace_header};
use drls::config::ResolvedConfig;
use drls::trace::write_trace;

fn main() {
    let mut args = std::env::args().skip(1);
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let config = args.next().map_or_else(|| root.join("configs/ring6.json"), PathBuf::from);
    let output = args.next().map_or_else(|| std::env::temp_dir().join("drls_trace.csv"), PathBuf::from);

    let cfg = ResolvedConfig::load(&config).unwrap_or_else(|e| panic!("{}: {e}", config.display()));
    println!("schedule: zeta = {}, T = {}, S = {}", cfg.schedule.zeta, cfg.schedule.steps, cfg.schedule.stop);
    let (sim, lines) = simulate_lines(&cfg, 4).unwrap();
    let mut out = BufWriter::new(File::create(&output).unwrap());
    write_trace(&mut out, &trace_header(&cfg, &sim), &lines).unwrap();

    let at = |t: u64| lines.iter().find(|l| l.row.t == t).unwrap();
    for t in [200, 1000, sim.schedule.stop] {
        let l = at(t);
        println!(
            "t = {t:>4}: local {:.4}, comm {:.4}, pooled {:.4}, comm bound {}",
            l.row.local_err,
            l.row.comm_err,
            l.row.global_err,
            l.comm_bound.map_or("-".into(), |b| format!("{b:.4}"))
        );
    }
    println!("wrote {} rows to {}", lines.len(), output.display());
}
