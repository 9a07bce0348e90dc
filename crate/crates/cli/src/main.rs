use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bisym_core::edge::{self, GradientOperator};
use bisym_core::image::{encode_pbm, encode_pgm, encode_ppm};
use bisym_core::phantom::{phantom_suite, Grade, GroundTruth, SUITE_VERSION};
use bisym_core::pipeline::{edge_counts, estimate_axis};
use bisym_core::report::AxisEcho;
use bisym_core::{
    decode_pnm, emit_report, generate_phantom, process_image, run_pipeline, AxisDegree,
    CannyParams, PhantomSpec, PipelineConfig, PixelSpacing, PnmImage, ReportDocument,
    SymmetryParams,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "bisym",
    version,
    about = "Asymmetry-based tumor detection on PNM images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write a JSON report and PPM overlay per image.
    Segment {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write the detected region as a PBM mask.
        #[arg(long)]
        mask: bool,
        /// Also write gray, homogenized, edge and enhanced-edge rasters.
        #[arg(long)]
        dump: bool,
    },
    /// Write a binary edge map for one operator and print its edge count.
    Edges {
        image: PathBuf,
        #[arg(long, value_enum, default_value = "canny")]
        operator: OperatorArg,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit the symmetry axis and print its coefficients as JSON.
    Axis {
        image: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Render a phantom from a JSON spec, or the built-in suite.
    Phantom {
        /// Phantom spec; may carry an extra "grade" field.
        #[arg(required_unless_present = "suite", conflicts_with = "suite")]
        spec: Option<PathBuf>,
        /// Write the built-in six-phantom suite instead.
        #[arg(long)]
        suite: bool,
        /// Also write the tumor-free twin of every suite phantom.
        #[arg(long, requires = "suite")]
        twins: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print a CSV of Roberts, Prewitt and Canny edge counts for every PNM
    /// image in a directory.
    CompareOperators {
        dir: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorArg {
    Roberts,
    Prewitt,
    Sobel,
    Canny,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u8).range(1..))]
    mt: u8,
    #[arg(long, default_value_t = 8)]
    quant_levels: u32,
    #[arg(long, default_value_t = 1.4)]
    sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    canny_low: f64,
    #[arg(long, default_value_t = 0.3)]
    canny_high: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    axis_degree: u8,
    #[arg(long, default_value_t = 2)]
    tol: usize,
    #[arg(long, default_value_t = 30)]
    min_area: usize,
    /// Pixel size in millimetres as `sx,sy`.
    #[arg(long, default_value = "1,1", value_parser = parse_spacing)]
    spacing: (f64, f64),
    /// Fraction of the maximum magnitude for Roberts/Prewitt edge counts.
    #[arg(long, default_value_t = 0.1)]
    edge_threshold: f64,
    /// Detect edges on the gray image instead of the homogenized one.
    #[arg(long)]
    raw_edges: bool,
}

fn parse_spacing(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `sx,sy`")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let config = PipelineConfig {
            canny: CannyParams::new(self.sigma, self.canny_low, self.canny_high)?,
            symmetry: SymmetryParams::new(self.mt, self.quant_levels)?,
            axis_degree: AxisDegree::try_from(self.axis_degree)?,
            tol: self.tol,
            min_area: self.min_area,
            spacing: PixelSpacing::new(self.spacing.0, self.spacing.1)?,
            edge_threshold: self.edge_threshold,
            raw_edges: self.raw_edges,
        };
        config.validate()?;
        Ok(config)
    }
}

fn read_image(path: &Path) -> Result<PnmImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_pnm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned())
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn edge_source(image: &PnmImage, config: &PipelineConfig) -> bisym_core::GrayImage {
    let gray = image.to_gray();
    if config.raw_edges {
        gray
    } else {
        process_image(&gray, &config.symmetry)
    }
}

fn segment_one(
    path: &Path,
    config: &PipelineConfig,
    out: &Path,
    mask: bool,
    dump: bool,
) -> Result<()> {
    let image = read_image(path)?;
    let result =
        run_pipeline(&image, config).with_context(|| format!("processing {}", path.display()))?;
    let name = stem(path);
    let doc = ReportDocument::new(file_name(path), config, &result.report);
    write(&out.join(format!("{name}.report.json")), &emit_report(&doc))?;
    write(
        &out.join(format!("{name}.overlay.ppm")),
        &encode_ppm(&result.overlay),
    )?;
    if mask {
        let m = match &result.report.region {
            Some(r) => r.to_mask(result.gray.width(), result.gray.height()),
            None => bisym_core::Mask::empty(result.gray.width(), result.gray.height()),
        };
        write(&out.join(format!("{name}.mask.pbm")), &encode_pbm(&m))?;
    }
    if dump {
        write(
            &out.join(format!("{name}.gray.pgm")),
            &encode_pgm(&result.gray),
        )?;
        write(
            &out.join(format!("{name}.homogenized.pgm")),
            &encode_pgm(&result.homogenized),
        )?;
        write(
            &out.join(format!("{name}.edges.pbm")),
            &encode_pbm(&result.edges),
        )?;
        write(
            &out.join(format!("{name}.enhanced.pbm")),
            &encode_pbm(&result.asymmetry.enhanced_mask()),
        )?;
    }
    let r = &result.report;
    if r.detected {
        println!(
            "{}: detected, area {} px ({} mm^2)",
            file_name(path),
            r.area_px,
            r.area_mm2
        );
    } else {
        println!("{}: no asymmetric region", file_name(path));
    }
    Ok(())
}

fn segment(
    images: &[PathBuf],
    config: &PipelineConfig,
    out: &Path,
    mask: bool,
    dump: bool,
) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut failed = 0;
    for path in images {
        if let Err(e) = segment_one(path, config, out, mask, dump) {
            eprintln!("error: {e:#}");
            failed += 1;
        }
    }
    if failed > 0 {
        bail!("{failed} of {} images failed", images.len());
    }
    Ok(())
}

fn edges(path: &Path, operator: OperatorArg, config: &PipelineConfig, out: &Path) -> Result<()> {
    let source = edge_source(&read_image(path)?, config);
    let (map, name) = match operator {
        OperatorArg::Canny => (edge::canny(&source, &config.canny)?, "canny"),
        other => {
            let op = match other {
                OperatorArg::Roberts => GradientOperator::Roberts,
                OperatorArg::Prewitt => GradientOperator::Prewitt,
                _ => GradientOperator::Sobel,
            };
            let field = edge::gradient(&source, op)?;
            (
                edge::threshold_edges(&field, config.edge_threshold)?,
                op.name(),
            )
        }
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(
        &out.join(format!("{}.{name}.pbm", stem(path))),
        &encode_pbm(&map),
    )?;
    println!("{}", edge::count_edges(&map));
    Ok(())
}

fn axis(path: &Path, config: &PipelineConfig) -> Result<()> {
    let source = edge_source(&read_image(path)?, config);
    let edges = edge::canny(&source, &config.canny)?;
    let a = estimate_axis(&edges, config.axis_degree)?;
    let doc = AxisEcho {
        degree: a.degree.as_u8(),
        a0: a.a0,
        a1: a.a1,
        a2: a.a2,
        sr: a.sr,
    };
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn write_phantom(out: &Path, name: &str, spec: &PhantomSpec, grade: Option<Grade>) -> Result<()> {
    let (image, truth) = generate_phantom(spec).with_context(|| format!("rendering {name}"))?;
    write(&out.join(format!("{name}.pgm")), &encode_pgm(&image))?;
    write(
        &out.join(format!("{name}.mask.pbm")),
        &encode_pbm(&truth.tumor_mask),
    )?;
    let mut text = serde_json::to_string_pretty(&truth_json(name, spec, &truth, grade))?;
    text.push('\n');
    write(&out.join(format!("{name}.truth.json")), text.as_bytes())
}

fn truth_json(
    name: &str,
    spec: &PhantomSpec,
    truth: &GroundTruth,
    grade: Option<Grade>,
) -> serde_json::Value {
    json!({
        "name": name,
        "grade": grade,
        "suite_version": SUITE_VERSION,
        "axis_a0": truth.axis_a0,
        "axis_a1": truth.axis_a1,
        "area_px": truth.area_px,
        "centroid": truth.centroid().map(|(x, y)| [x, y]),
        "spec": spec,
    })
}

fn phantom(
    spec_path: Option<&Path>,
    suite: bool,
    twins: bool,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let reseed = |spec: PhantomSpec| PhantomSpec {
        seed: seed.unwrap_or(spec.seed),
        ..spec
    };
    if suite {
        for entry in phantom_suite() {
            let spec = reseed(entry.spec);
            write_phantom(out, entry.name, &spec, Some(entry.grade))?;
            if twins {
                write_phantom(
                    out,
                    &format!("{}_clean", entry.name),
                    &spec.without_tumor(),
                    None,
                )?;
            }
        }
        return Ok(());
    }
    let path = spec_path.expect("clap enforces spec or --suite");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let grade: Option<Grade> = match value.get("grade") {
        Some(g) => serde_json::from_value(g.clone()).context("reading grade")?,
        None => None,
    };
    let spec: PhantomSpec =
        serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?;
    write_phantom(out, &stem(path), &reseed(spec), grade)
}

fn compare_operators(dir: &Path, config: &PipelineConfig) -> Result<()> {
    let mut images: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm" | "ppm" | "pnm")
            )
        })
        .collect();
    images.sort();
    println!("image,grade,roberts,prewitt,canny");
    for path in images {
        let source = edge_source(&read_image(&path)?, config);
        let canny = edge::canny(&source, &config.canny)?;
        let counts = edge_counts(&source, &canny, config.edge_threshold)?;
        let grade = read_grade(&dir.join(format!("{}.truth.json", stem(&path))));
        println!(
            "{},{},{},{},{}",
            file_name(&path),
            grade.map_or(String::new(), |g| g.to_string()),
            counts.roberts,
            counts.prewitt,
            counts.canny
        );
    }
    Ok(())
}

fn read_grade(sidecar: &Path) -> Option<Grade> {
    let text = fs::read_to_string(sidecar).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    serde_json::from_value(value.get("grade")?.clone()).ok()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment {
            images,
            pipeline,
            out,
            mask,
            dump,
        } => segment(&images, &pipeline.config()?, &out, mask, dump),
        Command::Edges {
            image,
            operator,
            pipeline,
            out,
        } => edges(&image, operator, &pipeline.config()?, &out),
        Command::Axis { image, pipeline } => axis(&image, &pipeline.config()?),
        Command::Phantom {
            spec,
            suite,
            twins,
            seed,
            out,
        } => phantom(spec.as_deref(), suite, twins, seed, &out),
        Command::CompareOperators { dir, pipeline } => compare_operators(&dir, &pipeline.config()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
