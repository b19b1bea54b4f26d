use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use scalelaws::entropy::{entropy_surface, EntropySurface, LogScaleAbscissa};
use scalelaws::error::Error;
use scalelaws::fluctuation::{write_omega_csv, EntropyMode, ScaleProduction};
use scalelaws::laws::{k_grid, verify_laws_with_surface, LawConfig, LawReport, Tolerances};
use scalelaws::necklace::PatternClass;
use scalelaws::synth::{gen_hilbert_variant, gen_pavement, gen_plane, gen_random, HilbertVariant};
use scalelaws::{color_census, load_image, save_image, ImageCube};
use serde_json::json;

use crate::args::{Abscissa, AnalyzeArgs, Format, Generator, InputArgs, Law, VerifyArgs};

pub const TOOL: &str = concat!("scalelaws ", env!("CARGO_PKG_VERSION"));

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        CliError {
            code: 1,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. }
            | Error::Json { .. }
            | Error::MalformedHeader { .. }
            | Error::PayloadSize { .. }
            | Error::UnknownFormat(_)
            | Error::NotRepresentable { .. } => 1,
            Error::NotSquare { .. } | Error::TooSmall { .. } => 3,
            _ => 2,
        };
        let mut message = e.to_string();
        if matches!(e, Error::NotSquare { .. }) {
            message.push_str(" (use --crop-square or --crop x y w h)");
        }
        CliError { code, message }
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn generate(kind: Generator) -> CliResult<u8> {
    let (cube, output) = match kind {
        Generator::Plane { n, output } => (gen_plane(n)?, output),
        Generator::Random { n, seed, output } => (gen_random(n, seed)?, output),
        Generator::Hilbert {
            m,
            seed,
            randomized,
            per_level,
            output,
        } => {
            let variant = if randomized {
                HilbertVariant::PerCell
            } else if per_level {
                HilbertVariant::PerLevel
            } else {
                HilbertVariant::Fixed
            };
            (gen_hilbert_variant(m, seed, variant)?, output)
        }
        Generator::Pavement { rows, cols, output } => (gen_pavement(rows, cols)?, output),
    };
    let provenance = format!("{} | {TOOL}", cube.provenance());
    let cube = cube.with_provenance(provenance);
    save_image(&cube, &output)?;
    let census = color_census(&cube);
    println!(
        "{}: {}x{}x{} dynamics {} | {} distinct colors of {} pixels, fraction {:.6}",
        output.display(),
        cube.width(),
        cube.height(),
        cube.channels(),
        cube.dynamics(),
        census.distinct_colors,
        census.total_pixels,
        census.fraction
    );
    Ok(0)
}

fn load_input(args: &InputArgs) -> CliResult<ImageCube> {
    let mut cube = load_image(&args.input, None)?;
    if let Some(c) = &args.crop {
        cube = cube.crop(c[0], c[1], c[2], c[3])?;
    }
    if args.crop_square {
        cube = cube.crop_square()?;
    }
    Ok(cube)
}

fn require_square(cube: &ImageCube) -> CliResult<usize> {
    if !cube.is_square() {
        return Err(Error::NotSquare {
            width: cube.width(),
            height: cube.height(),
        }
        .into());
    }
    Ok(cube.width())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    write_file(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        writeln!(out)
    })
}

fn input_provenance(args: &InputArgs, cube: &ImageCube) -> serde_json::Value {
    json!({
        "tool": TOOL,
        "input": args.input.display().to_string(),
        "crop": args.crop,
        "crop_square": args.crop_square,
        "image_provenance": cube.provenance(),
        "width": cube.width(),
        "height": cube.height(),
        "channels": cube.channels(),
    })
}

pub fn analyze(args: AnalyzeArgs) -> CliResult<u8> {
    let cube = load_input(&args.input)?;
    let n = require_square(&cube)?;
    let ks = k_grid(cube.k_max(), args.grid.k_step)?;
    let s_max = args.grid.s_max.unwrap_or(n / 2);
    if s_max == 0 || s_max > n {
        return Err(CliError::usage(format!(
            "--s-max must be in 1..={n}, got {s_max}"
        )));
    }
    let scales: Vec<usize> = (1..=s_max).collect();
    let surface = entropy_surface(&cube, &ks, &scales)?;
    let color = ScaleProduction::new(&cube, EntropyMode::Color)?;
    let pattern = ScaleProduction::new(&cube, EntropyMode::Pattern)?;

    create_dir(&args.out_dir)?;
    write_file(&args.out_dir.join("surface.csv"), |out| {
        surface.write_csv(out)
    })?;
    write_file(&args.out_dir.join("delta.csv"), |out| {
        writeln!(out, "mode,k,s,dS")?;
        for (name, prod) in [("color", &color), ("pattern", &pattern)] {
            for &k in &ks {
                for (s, d) in prod.deltas(k) {
                    writeln!(out, "{name},{k},{s},{d}")?;
                }
            }
        }
        Ok(())
    })?;
    let omega_pattern = pattern.omega_all(&ks);
    let omega_color = color.omega_all(&ks);
    write_file(&args.out_dir.join("omega_patterns.csv"), |out| {
        write_omega_csv(&omega_pattern, out)
    })?;
    write_file(&args.out_dir.join("omega_image.csv"), |out| {
        write_omega_csv(&omega_color, out)
    })?;

    let mut provenance = input_provenance(&args.input, &cube);
    provenance["command"] = json!("analyze");
    provenance["k_step"] = json!(args.grid.k_step);
    provenance["k_grid_len"] = json!(ks.len());
    provenance["s_max"] = json!(s_max);
    write_json(&args.out_dir.join("provenance.json"), &provenance)?;

    eprintln!(
        "analyzed {}x{}x{}: {} k values x {} scales -> {}",
        cube.width(),
        cube.height(),
        cube.channels(),
        ks.len(),
        scales.len(),
        args.out_dir.display()
    );
    Ok(0)
}

fn tolerances(args: &VerifyArgs) -> CliResult<Tolerances> {
    let mut t = if args.tol_synthetic {
        Tolerances::synthetic()
    } else {
        Tolerances::natural_scene()
    };
    for (value, slot) in [
        (args.tol_l1_slope, &mut t.l1_slope),
        (args.tol_l1_intercept, &mut t.l1_intercept),
        (args.tol_l2, &mut t.l2_max),
        (args.tol_l2_spread, &mut t.l2_spread),
        (args.tol_l3, &mut t.l3_omega),
    ] {
        if let Some(v) = value {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::usage(format!(
                    "tolerances must be finite and >= 0, got {v}"
                )));
            }
            *slot = v;
        }
    }
    Ok(t)
}

fn law_config(args: &VerifyArgs) -> CliResult<LawConfig> {
    Ok(LawConfig {
        k_step: args.grid.k_step,
        s_max: args.grid.s_max,
        probe_scales: args.probe_scales.clone(),
        abundance_scale: args.abundance_scale,
        abscissa: match args.abscissa {
            Abscissa::Nominal => LogScaleAbscissa::Nominal,
            Abscissa::Cropped => LogScaleAbscissa::Cropped,
        },
        tolerances: tolerances(args)?,
        ..LawConfig::default()
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn print_summary(report: &LawReport) {
    let t = &report.config.tolerances;
    let fit = &report.l1.fit;
    eprintln!(
        "census: {} / {} distinct, fraction {:.6}{}",
        report.census.distinct_colors,
        report.census.total_pixels,
        report.census.fraction,
        if report.informational {
            " (not fully colored: verdicts informational)"
        } else {
            ""
        }
    );
    eprintln!(
        "L1 {}: slope {:.4} +- {:.4} (target {} +- {}), intercept {:.4} (+- {})",
        verdict(report.l1.pass),
        fit.slope,
        fit.sigma_slope,
        t.l1_target_slope,
        t.l1_slope,
        fit.intercept,
        t.l1_intercept
    );
    eprintln!(
        "L2 {}: max_k S_H mean {:.4} spread {:.4} over s = {:?} (target {} +- {}, spread <= {})",
        verdict(report.l2.pass),
        report.l2.mean,
        report.l2.spread,
        report.l2.probes.iter().map(|p| p.s).collect::<Vec<_>>(),
        t.l2_target,
        t.l2_max,
        t.l2_spread
    );
    eprintln!(
        "L3 {}: max |Omega - 1| {:.4} at k = {} (tol {})",
        verdict(report.l3.pass),
        report.l3.max_deviation,
        report.l3.worst_k,
        t.l3_omega
    );
}

fn write_csv_bundle(dir: &Path, report: &LawReport, surface: &EntropySurface) -> CliResult<()> {
    write_file(&dir.join("surface.csv"), |out| surface.write_csv(out))?;
    write_file(&dir.join("l1_points.csv"), |out| {
        writeln!(out, "s,x,S_C")?;
        for (&s, &e) in report.l1.scales.iter().zip(&report.l1.entropies) {
            writeln!(
                out,
                "{s},{},{e}",
                report.l1.abscissa.abscissa(s, report.side)
            )?;
        }
        Ok(())
    })?;
    write_file(&dir.join("l1_per_k.csv"), |out| {
        writeln!(out, "k,a,b,sigma_a")?;
        for f in &report.l1.per_k {
            writeln!(out, "{},{},{},{}", f.k, f.a, f.b, f.sigma_a)?;
        }
        Ok(())
    })?;
    write_file(&dir.join("l2_maxima.csv"), |out| {
        writeln!(out, "s,k_star,S_star")?;
        for p in &report.l2.probes {
            writeln!(out, "{},{},{}", p.s, p.k_star, p.s_star)?;
        }
        Ok(())
    })?;
    write_file(&dir.join("omega_patterns.csv"), |out| {
        write_omega_csv(&report.l3.patterns, out)
    })?;
    write_file(&dir.join("omega_image.csv"), |out| {
        write_omega_csv(&report.l3.image, out)
    })?;
    write_file(&dir.join("abundance.csv"), |out| {
        writeln!(out, "pattern,percent")?;
        for (c, p) in PatternClass::ALL.iter().zip(&report.abundance.percent) {
            writeln!(out, "{c},{p}")?;
        }
        Ok(())
    })?;
    write_file(&dir.join("verdicts.csv"), |out| {
        writeln!(out, "law,value,pass")?;
        writeln!(out, "L1,{},{}", report.l1.fit.slope, report.l1.pass)?;
        writeln!(out, "L2,{},{}", report.l2.mean, report.l2.pass)?;
        writeln!(out, "L3,{},{}", report.l3.max_deviation, report.l3.pass)
    })
}

pub fn verify(args: VerifyArgs) -> CliResult<u8> {
    let config = law_config(&args)?;
    if args.format != Format::Json && args.out_dir.is_none() {
        return Err(CliError::usage("--format csv/both needs --out-dir"));
    }
    let cube = load_input(&args.input)?;
    require_square(&cube)?;
    let (report, surface) = verify_laws_with_surface(&cube, &config)?;

    let document = json!({
        "provenance": input_provenance(&args.input, &cube),
        "report": report,
    });
    match &args.out_dir {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, &document)
                .map_err(io::Error::from)
                .and_then(|_| writeln!(lock))
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
        Some(dir) => {
            create_dir(dir)?;
            if args.format != Format::Csv {
                write_json(&dir.join("report.json"), &document)?;
            }
            if args.format != Format::Json {
                write_csv_bundle(dir, &report, &surface)?;
                write_json(&dir.join("provenance.json"), &document["provenance"])?;
            }
        }
    }
    print_summary(&report);

    let verdicts = report.verdicts();
    let failed: Vec<String> = args
        .expect
        .iter()
        .filter(|&&law| {
            !verdicts[match law {
                Law::L1 => 0,
                Law::L2 => 1,
                Law::L3 => 2,
            }]
        })
        .map(|law| format!("{law:?}"))
        .collect();
    if args.strict && !failed.is_empty() {
        eprintln!("strict: expected law(s) failed: {}", failed.join(","));
        return Ok(4);
    }
    Ok(0)
}
