use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use websem_cli::commands::{self, Protocol};
use websem_cli::status::exit_code;
use websem_cli::{server, EngineConfig};

#[derive(Parser)]
#[command(name = "websem", version, about = "Joint text and image embeddings for retrieval")]
struct Cli {
    /// TOML config; relative paths inside it resolve against its directory.
    #[arg(long, global = true, default_value = "websem.toml")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic concept-mixture corpus to the corpus path.
    GenSynthetic,
    /// Train the text embedding and tf-idf statistics.
    TrainText,
    /// Train the image regressor onto the text embedding.
    TrainVisual,
    /// Embed the test split and save the retrieval index.
    BuildIndex,
    /// Rank indexed items, e.g. `"snow -leopard mountain:0.5 @d0042"`.
    Query {
        query: String,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Run an evaluation protocol and write JSON and CSV reports.
    Eval {
        #[arg(value_enum)]
        protocol: Protocol,
    },
    /// Serve the HTTP API and the explorer UI.
    Serve,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || {
        let mut cfg = EngineConfig::load(&cli.config)?;
        if let Some(seed) = cli.seed {
            cfg.set_seed(seed);
        }
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        match cli.command {
            Command::GenSynthetic => commands::gen_synthetic(&cfg, &mut out),
            Command::TrainText => commands::train_text_cmd(&cfg, &mut out),
            Command::TrainVisual => commands::train_visual_cmd(&cfg, &mut out),
            Command::BuildIndex => commands::build_index_cmd(&cfg, &mut out),
            Command::Query { ref query, k } => commands::query_cmd(&cfg, query, k, &mut out),
            Command::Eval { protocol } => commands::eval_cmd(&cfg, protocol, &mut out).map(|_| ()),
            Command::Serve => {
                drop(out);
                server::serve(cfg)
            }
        }
    };
    match run() {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
