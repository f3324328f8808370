//! Model files, experiment configuration, CSV output and the command-line
//! front end for `evobarrier-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod model_file;
pub mod output;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use run::{run, Command, Console};

/// Entry point shared by the binary and the tests: parses `args`, runs the
/// command and returns the exit status. Failures print a JSON error record
/// to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = cli::parse(args).and_then(|parsed| match parsed {
        Ok(cli) => {
            let (command, cfg) = cli.resolve()?;
            run(command, &cfg, &mut Console { out, err: &mut *err })
        }
        Err(text) => {
            let _ = out.write_all(text.as_bytes());
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.record());
            match e {
                CliError::Flags(_) => 2,
                _ => 1,
            }
        }
    }
}
