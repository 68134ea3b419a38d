mod args;
mod commands;
mod parse;
mod render;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, FormatArg};
use commands::{CliError, CommandOutput, Ctx, Format};
use parse::FileConfig;

fn resolve_format(flag: Option<FormatArg>, file: &FileConfig) -> Result<Format, CliError> {
    if let Some(f) = flag {
        return Ok(match f {
            FormatArg::Table => Format::Table,
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        });
    }
    match file.format() {
        Some("table") | None => Ok(Format::Table),
        Some("json") => Ok(Format::Json),
        Some("csv") => Ok(Format::Csv),
        Some(other) => Err(CliError::Usage(format!(
            "config format '{other}' is not one of table|json|csv"
        ))),
    }
}

fn run(cli: &Cli) -> Result<CommandOutput, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Usage)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx {
        format: resolve_format(cli.format, &file)?,
        file,
    };
    match &cli.command {
        Command::Bound(args) => commands::cmd_bound(&ctx, args),
        Command::Threshold(args) => commands::cmd_threshold(&ctx, args),
        Command::McVerify(args) => commands::cmd_mc_verify(&ctx, args),
        Command::InferAlpha(args) => commands::cmd_infer_alpha(&ctx, args),
        Command::InferMin(args) => commands::cmd_infer_min(&ctx, args),
        Command::Validate(args) => commands::cmd_validate(&ctx, args, false),
        Command::ValidateOnline(args) => commands::cmd_validate(&ctx, args, true),
        Command::Survival(args) => commands::cmd_survival(&ctx, args),
        Command::Synth(args) => commands::cmd_synth(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            let write_result = match &cli.output {
                Some(path) => std::fs::write(path, output.text.as_bytes()),
                None => std::io::stdout().write_all(output.text.as_bytes()),
            };
            if let Err(err) = write_result {
                eprintln!("error: cannot write output: {err}");
                return ExitCode::from(2);
            }
            ExitCode::from(output.exit_code as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
