use std::time::Instant;

use clap::Parser;

use spinbus::cli::{exit_code, run, Cli, THREADS_ENV};

fn main() {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        match value.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .expect("thread pool is configured once, before any sweep");
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got '{value}'");
                std::process::exit(2);
            }
        }
    }
    let cli = Cli::parse();
    let started = Instant::now();
    match run(cli) {
        Ok(()) => {
            // metadata only; artifacts stay byte-identical across runs
            eprintln!("wall_time_ms={}", started.elapsed().as_millis());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
