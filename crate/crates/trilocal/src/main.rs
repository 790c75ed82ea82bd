use std::process::ExitCode;

use trilocal::cli::{parse_args, run, CliError};

fn main() -> ExitCode {
    let cfg = match parse_args(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(CliError::Usage(e)) => {
            // Clap renders help/version on stdout and usage errors on stderr.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(jobs) = cfg.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match run(&cfg) {
        Ok(summary) if summary.failed_points == 0 => ExitCode::SUCCESS,
        Ok(summary) => {
            eprintln!("completed with {} failed points", summary.failed_points);
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
