//! The `portal` command line.
//!
//! Exit codes: 0 on success, 1 when the engine reports an error (a bundle
//! that fails validation, an expression naming nothing, an unknown user,
//! an unavailable port) and 2 for usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use portal_core::bundle::load_bundle;
use portal_core::engine::{render_page, Format};
use portal_core::{repl, Portal};

#[derive(Debug, Parser)]
#[command(
    name = "portal",
    version,
    about = "Load, query, render and serve a portal bundle"
)]
pub struct Cli {
    /// Bundle used by `eval`, `render`, `serve` and `stats`.
    #[arg(long, env = "PORTAL_BUNDLE", global = true)]
    pub bundle: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a bundle and summarize what it declares.
    Load { path: PathBuf },
    /// Evaluate an application chain such as `F({higraph,mmedia})({corporate})`.
    Eval { expr: String },
    /// Build a page for a user and print it.
    Render {
        nav: String,
        #[arg(long)]
        user: String,
        #[arg(long, value_enum, default_value_t = FormatArg::Structured)]
        format: FormatArg,
    },
    /// Serve the HTTP API on 127.0.0.1.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Print the view statistics report of the loaded engine.
    Stats,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Html,
    Structured,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Html => Format::Html,
            FormatArg::Structured => Format::Structured,
        }
    }
}

enum Failure {
    Usage(String),
    Engine(String),
}

impl From<portal_core::Error> for Failure {
    fn from(e: portal_core::Error) -> Self {
        Failure::Engine(format!("{}: {e}", e.code()))
    }
}

fn bundle(cli: &Cli) -> Result<Portal, Failure> {
    let path = cli.bundle.as_ref().ok_or_else(|| {
        Failure::Usage("this command needs --bundle <path> or PORTAL_BUNDLE".into())
    })?;
    Ok(load_bundle(path)?)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Engine(e.to_string());
    match &cli.command {
        Command::Load { path } => {
            let p = load_bundle(path)?;
            let site = p.site();
            writeln!(
                out,
                "{}: {} sources, {} navigation points, {} templates, {} users, {} roles",
                path.display(),
                p.sources().len(),
                site.navigation().count(),
                site.templates().count(),
                p.access().users().count(),
                p.access().roles().count(),
            )
            .map_err(io)?;
        }
        Command::Eval { expr } => {
            let p = bundle(cli)?;
            writeln!(out, "{}", repl::eval_str(&p, expr)?).map_err(io)?;
        }
        Command::Render { nav, user, format } => {
            let mut p = bundle(cli)?;
            let session = p.open_session(user)?;
            let page = p.bind_slots(nav, session.id.as_str())?;
            writeln!(out, "{}", render_page(&page, (*format).into())).map_err(io)?;
        }
        Command::Stats => {
            let p = bundle(cli)?;
            let report =
                serde_json::to_string_pretty(&p.stats_report()).expect("report serializes");
            writeln!(out, "{report}").map_err(io)?;
        }
        Command::Serve { port } => {
            let p = bundle(cli)?;
            let runtime = tokio::runtime::Runtime::new().map_err(io)?;
            runtime.block_on(async {
                let listener = crate::bind(*port)
                    .await
                    .map_err(|e| Failure::Engine(format!("PortUnavailable: {e}")))?;
                if let Ok(addr) = listener.local_addr() {
                    let _ = writeln!(out, "listening on http://{addr}");
                    let _ = out.flush();
                }
                crate::serve_on(listener, crate::share(p))
                    .await
                    .map_err(|e| Failure::Engine(e.to_string()))
            })?;
        }
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let target: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(target, "{}", e.render());
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Engine(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}
