use clap::{Args, Parser, Subcommand};
use strata2rec::cli::{cmd_compute, cmd_emit_recursion, cmd_verify, OutputFormat, RunConfig};
use strata2rec::engine::Assignment;

#[derive(Parser)]
#[command(
    name = "strata2rec",
    version,
    about = "Compile a genus-2 stratum-class relation into exact per-degree recursions \
             for the plane's descendent series, solve, and verify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the three series and print the value table.
    Compute(CommonArgs),
    /// Solve, check every surplus equation, and compare the compiled
    /// all-divisor equation against the closed-form coefficient families.
    Verify(CommonArgs),
    /// Print the compiled equation for one marking assignment.
    EmitRecursion(EmitArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Largest degree to solve.
    #[arg(long, default_value_t = 10)]
    max_degree: u32,
    /// Elliptic input table (TSV); defaults to the shipped data.
    #[arg(long)]
    genus1: Option<String>,
    /// Relation source file; defaults to the shipped relation.
    #[arg(long)]
    relation: Option<String>,
    /// Output format.
    #[arg(long, default_value = "text", value_parser = ["csv", "json", "text"])]
    format: String,
    /// Write output to a file instead of stdout.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct EmitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Marking assignment as three basis indices, e.g. 1,1,2.
    #[arg(long)]
    assignment: String,
}

fn to_config(args: &CommonArgs) -> RunConfig {
    let format = match args.format.as_str() {
        "csv" => OutputFormat::Csv,
        "json" => OutputFormat::Json,
        _ => OutputFormat::Text,
    };
    let threads = std::env::var("STRATA2REC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1);
    RunConfig {
        max_degree: args.max_degree,
        genus1_path: args.genus1.clone(),
        relation_path: args.relation.clone(),
        format,
        output: args.output.clone(),
        threads,
    }
}

fn parse_assignment(text: &str) -> Result<Assignment, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("assignment must be three comma-separated indices, got `{text}`"));
    }
    let mut out = [0u8; 3];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .trim()
            .parse::<u8>()
            .map_err(|_| format!("bad assignment index `{part}`"))?;
        if *slot > 2 {
            return Err(format!("assignment index {slot} out of range 0..2"));
        }
    }
    Ok(out)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    let outcome = match &cli.command {
        Command::Compute(args) => cmd_compute(&to_config(args)),
        Command::Verify(args) => cmd_verify(&to_config(args)),
        Command::EmitRecursion(args) => match parse_assignment(&args.assignment) {
            Ok(assignment) => cmd_emit_recursion(&to_config(&args.common), assignment),
            Err(message) => {
                eprintln!("{message}");
                std::process::exit(1);
            }
        },
    };
    if let Err(error) = outcome {
        let diagnostic = serde_json::json!({
            "error": {
                "code": error.exit_code(),
                "message": error.to_string(),
            }
        });
        eprintln!("{diagnostic}");
        std::process::exit(error.exit_code());
    }
}
