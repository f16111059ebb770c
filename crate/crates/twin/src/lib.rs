//! The `twin` command-line tool and scene server.

pub mod cli;
pub mod commands;
pub mod server;

use std::io::Write;

use cli::{Cli, Command};

/// Runs one parsed command line, writing reports to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Convert(args) => {
            let summary = commands::convert(&args)?;
            writeln!(out, "wrote {} frames to {}", summary.frames, args.out.display())?;
            for (i, (a, b)) in summary.points_in.iter().zip(&summary.points_out).enumerate() {
                writeln!(out, "  frame {i:06}: {a} -> {b} points")?;
            }
        }
        Command::Render(args) => {
            let image = commands::render(&args)?;
            writeln!(out, "wrote {}x{} image to {}", image.width, image.height, args.out.display())?;
        }
        Command::BenchLoader(args) => {
            let report = commands::bench_loader(&args)?;
            commands::print_bench(&report, args.format, out)?;
        }
        Command::GenSynthetic(args) => {
            let manifest = commands::gen_synthetic(&args)?;
            writeln!(out, "{}", commands::scene_summary(&args.out, &manifest))?;
        }
        Command::PoseCompare(args) => {
            let report = commands::pose_compare(&args)?;
            commands::print_pose(&report, args.format, out)?;
        }
        Command::Serve(args) => {
            let config = server::ServeConfig {
                bind: args.bind,
                port: args.port,
                scene_root: args.scene.scene,
                cors: args.cors,
                viewer_dir: args.viewer_dir,
            };
            tokio::runtime::Runtime::new()?.block_on(server::serve(config))?;
        }
    }
    Ok(())
}
