use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use matbench::harness::{
    emit_report, parse_plan, read_summaries, run_batch, run_test, summary_csv, write_outputs, Cli, Command,
    TimingTable,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { args, out } => {
            let spec = args.to_spec(Path::new(""));
            match run_test(&spec).and_then(|r| write_outputs(&r, &out).map(|_| r)) {
                Ok(r) => {
                    println!("{}: train AP {:.4}, test AP {:.4}", r.test_name, r.train_ap.ap, r.test_ap.ap);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&format!("{}: {e}", spec.test_name)),
            }
        }
        Command::Batch { plan, parallelism, out } => {
            let text = match fs::read_to_string(&plan) {
                Ok(t) => t,
                Err(e) => return usage(&format!("{}: {e}", plan.display())),
            };
            let base = plan.parent().unwrap_or(Path::new(""));
            let specs = match parse_plan(&text, base) {
                Ok(s) => s,
                Err(e) => return usage(&format!("{}: {e}", plan.display())),
            };
            let batch = match run_batch(&specs, parallelism) {
                Ok(b) => b,
                Err(e) => return usage(&e.to_string()),
            };
            let mut failed = batch.failures();
            for (spec, result) in specs.iter().zip(&batch.results) {
                let outcome = result
                    .as_ref()
                    .map_err(ToString::to_string)
                    .and_then(|r| write_outputs(r, &out).map_err(|e| e.to_string()));
                if let Err(e) = outcome {
                    eprintln!("{}: {e}", spec.test_name);
                    failed += usize::from(result.is_ok());
                }
            }
            let written = fs::create_dir_all(&out)
                .and_then(|_| fs::write(out.join("summary.csv"), summary_csv(&batch.rows())))
                .and_then(|_| fs::write(out.join("timings.csv"), batch.timing.to_csv()));
            if let Err(e) = written {
                return fail(&format!("{}: {e}", out.display()));
            }
            println!("{} of {} tests succeeded", specs.len() - failed, specs.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
        Command::Report { layout, input } => match read_summaries(&input) {
            Ok(rows) => match emit_report(&rows, layout) {
                Ok(csv) => {
                    print!("{csv}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e.to_string()),
            },
            Err(e) => fail(&e.to_string()),
        },
        Command::Timings { input } => match read_summaries(&input) {
            Ok(rows) => {
                print!("{}", TimingTable::from_results(&rows).to_csv());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e.to_string()),
        },
    }
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_FAILURE)
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}
