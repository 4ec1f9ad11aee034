//! Command-line pipeline: analyze scenes, build flattening maps, render,
//! and re-verify previously written reports.
//!
//! Exit codes: 0 success, 2 unreadable input, 3 contract or degenerate
//! geometry, 4 numeric failure, 5 verification failure.

mod render;
mod report;
mod scene;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use regvec::build::set_radius;
use regvec::oracle;
use regvec::system::validate;
use regvec::{build_system, build_flattening, flatten_set, Config, Error, PLSet};
use report::*;
use scene::SceneFile;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "regvec", version, about = "Bi-Lipschitz flattening of piecewise-linear scenes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Direction-discipline radius eta.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Direction-region threshold.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Hard floor for all regularity margins.
    #[arg(long, global = true)]
    alpha_min: Option<f64>,
    /// Sphere mesh resolution for direction regions.
    #[arg(long, global = true)]
    mesh_res: Option<usize>,
    /// Sample count for validators and oracles.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// RNG seed for all sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Evaluation tolerance.
    #[arg(long, global = true)]
    eps_eval: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tangent directions, regularity margins, and the best direction of a scene.
    Analyze {
        scene: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the flattening map with certificates; write map and report.
    Flatten {
        scene: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Export a scene as SVG (plane) or OBJ (space).
    Render {
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overlay the flattened image cloud (plane scenes only).
        #[arg(long)]
        with_image: bool,
    },
    /// Re-run the pipeline recorded in a report and check every claim.
    Verify { report: PathBuf },
}

fn main() {
    if let Ok(t) = std::env::var("REGVEC_THREADS") {
        if let Ok(t) = t.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Dimension(_) | Error::Contract(_) | Error::Degenerate(_) => 3,
        Error::Numeric(_) => 4,
        Error::Verification(_) => 5,
    }
}

fn config_of(cli: &Cli) -> Config {
    let mut c = Config::default();
    if let Some(v) = cli.eta {
        c.eta = v;
    }
    if let Some(v) = cli.alpha {
        c.alpha_lambda = v;
    }
    if let Some(v) = cli.alpha_min {
        c.alpha_min = v;
    }
    if let Some(v) = cli.mesh_res {
        c.mesh_res = v;
    }
    if let Some(v) = cli.samples {
        c.samples = v;
    }
    if let Some(v) = cli.seed {
        c.seed = v;
    }
    if let Some(v) = cli.eps_eval {
        c.eps_eval = v;
    }
    c
}

fn run(cli: Cli) -> i32 {
    let cfg = config_of(&cli);
    match &cli.cmd {
        Cmd::Analyze { scene, out } => match load_scene(scene) {
            Err(code) => code,
            Ok((sf, a)) => match analyze(&sf, &a) {
                Ok(json) => emit(out.as_deref(), &json),
                Err(e) => fail(&e),
            },
        },
        Cmd::Flatten { scene, out, report } => match load_scene(scene) {
            Err(code) => code,
            Ok((sf, a)) => match run_flatten(&sf, &a, &cfg) {
                Ok((rep, map)) => {
                    let map_json = serde_json::to_string_pretty(&map).expect("serialize");
                    let rep_json = serde_json::to_string_pretty(&rep).expect("serialize");
                    if let Some(p) = out {
                        if std::fs::write(p, map_json).is_err() {
                            eprintln!("cannot write {}", p.display());
                            return 2;
                        }
                    }
                    match report {
                        Some(p) => {
                            if std::fs::write(p, rep_json).is_err() {
                                eprintln!("cannot write {}", p.display());
                                return 2;
                            }
                        }
                        None => println!("{rep_json}"),
                    }
                    eprintln!(
                        "hypersurfaces: {}  L_fwd: {:.4}  L_inv: {:.4}  alpha_reg: {:.4}  ok: {}",
                        rep.hypersurfaces,
                        rep.certificate.l_fwd,
                        rep.certificate.l_inv,
                        rep.certificate.alpha_reg,
                        rep.ok
                    );
                    if rep.ok {
                        0
                    } else {
                        5
                    }
                }
                Err(e) => fail(&e),
            },
        },
        Cmd::Render { scene, out, with_image } => match load_scene(scene) {
            Err(code) => code,
            Ok((_, a)) => match render_cmd(&a, *with_image, &cfg) {
                Ok(text) => {
                    if std::fs::write(out, text).is_err() {
                        eprintln!("cannot write {}", out.display());
                        2
                    } else {
                        0
                    }
                }
                Err(e) => fail(&e),
            },
        },
        Cmd::Verify { report } => {
            let text = match std::fs::read_to_string(report) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", report.display());
                    return 2;
                }
            };
            let rep: FlattenReport = match serde_json::from_str(&text) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("cannot parse {}: {e}", report.display());
                    return 2;
                }
            };
            match verify_report(&rep) {
                Ok(true) => {
                    println!("verification: PASS");
                    0
                }
                Ok(false) => {
                    println!("verification: FAIL");
                    5
                }
                Err(e) => fail(&e),
            }
        }
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    error_code(e)
}

fn emit(out: Option<&Path>, json: &str) -> i32 {
    match out {
        Some(p) => {
            if std::fs::write(p, json).is_err() {
                eprintln!("cannot write {}", p.display());
                2
            } else {
                0
            }
        }
        None => {
            println!("{json}");
            0
        }
    }
}

fn load_scene(path: &Path) -> Result<(SceneFile, PLSet), i32> {
    let sf = match SceneFile::load(path) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("{msg}");
            return Err(2);
        }
    };
    match sf.to_set() {
        Ok(a) => Ok((sf, a)),
        Err(e) => {
            eprintln!("error: {e}");
            Err(error_code(&e))
        }
    }
}

fn analyze(sf: &SceneFile, a: &PLSet) -> regvec::Result<String> {
    let n = a.ambient_dim();
    let en = {
        let mut v = DVector::zeros(n);
        v[n - 1] = 1.0;
        v
    };
    let tau = regvec::pl::tangent_set(a)?;
    let margin_en = regvec::pl::regularity_margin(&en, a)?;
    let (best, best_margin) = regvec::geom::max_min_direction(n, &tau)?;
    let (_, oracle_margin) = oracle::grid_sphere_argmax(n, &tau, 2000)?;
    let out = serde_json::json!({
        "name": sf.name,
        "dimension": n,
        "simplices": a.simplices().len(),
        "tangent_directions": tau.len(),
        "margin_vertical": margin_en,
        "best_direction": best.iter().cloned().collect::<Vec<f64>>(),
        "best_margin": best_margin,
        "oracle_margin": oracle_margin,
    });
    Ok(serde_json::to_string_pretty(&out).expect("serialize"))
}

fn run_flatten(
    sf: &SceneFile,
    a: &PLSet,
    cfg: &Config,
) -> regvec::Result<(FlattenReport, MapFile)> {
    let n = a.ambient_dim();
    let radius = set_radius(a);

    let t0 = Instant::now();
    let s = build_system(a, cfg)?;
    let build_ms = t0.elapsed().as_millis();

    let t1 = Instant::now();
    let map = build_flattening(&s, radius, cfg)?;
    let flatten_ms = t1.elapsed().as_millis();

    let t2 = Instant::now();
    // reuse the validator run from the flattening build; the extra pass
    // against the set itself only needs the membership samples
    let val = match map.validation() {
        Some(rep) => {
            let mut member_cfg = cfg.clone();
            member_cfg.samples = cfg.samples / 4;
            let member = validate(&s, Some(a), radius, &member_cfg)?;
            let mut rep = rep.clone();
            rep.membership_violations = member.membership_violations;
            rep.membership_worst = member.membership_worst;
            rep.ok = rep.ok && member.ok;
            rep
        }
        None => validate(&s, Some(a), radius, cfg)?,
    };
    let cert = map.certificate();
    let lo = DVector::from_element(n, -radius);
    let hi = DVector::from_element(n, radius);
    let bilip = oracle::estimate_bilipschitz(&map, &lo, &hi, cfg.samples, cfg.seed)?;
    let per = (cfg.samples / a.simplices().len().max(1)).clamp(16, 200);
    let cover = oracle::check_graph_cover(&map, a, per, 1e-8, cert.l_eta + 1e-6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut rt_worst: f64 = 0.0;
    for _ in 0..(cfg.samples / 10).max(500) {
        let q = DVector::from_fn(n, |_, _| rng.gen_range(-radius..=radius));
        let p = map.apply(&q)?;
        rt_worst = rt_worst.max((map.apply_inverse(&p)? - &q).norm());
    }
    let verify_ms = t2.elapsed().as_millis();

    let ok = val.ok
        && cover.ok
        && bilip.l_fwd <= cert.l_fwd * 1.01
        && bilip.l_inv <= cert.l_inv * 1.01
        && rt_worst <= 1e-6;

    let rep = FlattenReport {
        scene: sf.clone(),
        settings: Settings::from_config(cfg),
        hypersurfaces: s.len(),
        certificate: CertificateDump {
            l_fwd: cert.l_fwd,
            l_inv: cert.l_inv,
            alpha_reg: cert.alpha_reg,
            l_eta: cert.l_eta,
        },
        validation: ValidationDump {
            samples: val.samples,
            order_violations: val.order_violations,
            min_gap: val.min_gap,
            e_mismatches: val.e_mismatches,
            membership_violations: val.membership_violations,
            membership_worst: val.membership_worst,
            ok: val.ok,
        },
        bilipschitz: BilipDump {
            sampled_l_fwd: bilip.l_fwd,
            sampled_l_inv: bilip.l_inv,
            pairs: bilip.pairs,
        },
        cover: CoverDump {
            samples: cover.samples,
            off_graph: cover.off_graph,
            worst_residual: cover.worst_residual,
            slope_violations: cover.slope_violations,
            worst_slope: cover.worst_slope,
            ok: cover.ok,
        },
        round_trip_worst: rt_worst,
        timings: Timings {
            build_ms,
            flatten_ms,
            verify_ms,
        },
        ok,
    };

    let walls = s
        .entries()
        .iter()
        .map(|e| WallDump {
            dir: e.hyp.dir().iter().cloned().collect(),
            height_lipschitz: e.hyp.height().l_cert(),
        })
        .collect();
    let floors = map
        .floors()
        .iter()
        .map(|f| tabulate_floor(f, n - 1, radius))
        .collect();
    let mapfile = MapFile {
        dimension: n,
        certificate: rep.certificate.clone(),
        walls,
        floors,
    };
    Ok((rep, mapfile))
}

fn tabulate_floor(f: &regvec::LipFn, d: usize, radius: f64) -> FloorDump {
    let per_axis = if d <= 1 { 513 } else { 65 };
    let step = 2.0 * radius / (per_axis - 1) as f64;
    let shape = vec![per_axis; d.max(1)];
    let total: usize = shape.iter().product();
    let mut values = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let x = DVector::from_fn(d, |_, _| {
            let c = rem % per_axis;
            rem /= per_axis;
            -radius + c as f64 * step
        });
        values.push(f.eval(&x));
    }
    FloorDump {
        lipschitz: f.l_cert(),
        origin: vec![-radius; d],
        step: vec![step; d],
        shape,
        values,
    }
}

fn render_cmd(a: &PLSet, with_image: bool, cfg: &Config) -> regvec::Result<String> {
    match a.ambient_dim() {
        2 => {
            let image = if with_image {
                let s = build_system(a, cfg)?;
                let map = build_flattening(&s, set_radius(a), cfg)?;
                Some(flatten_set(&map, a, 64)?)
            } else {
                None
            };
            render::render_svg(a, image.as_deref())
        }
        3 => render::render_obj(a),
        d => Err(Error::dim(format!(
            "no renderer for ambient dimension {d}"
        ))),
    }
}

fn verify_report(rep: &FlattenReport) -> regvec::Result<bool> {
    let a = rep.scene.to_set()?;
    let cfg = rep.settings.to_config();
    let (fresh, _) = run_flatten(&rep.scene, &a, &cfg)?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    let mut ok = true;
    let mut check = |name: &str, pass: bool| {
        println!("  {} {name}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };
    check("pipeline healthy", fresh.ok);
    check("validator clean", fresh.validation.ok);
    check("image on floor graphs", fresh.cover.ok);
    check(
        "certificate L_fwd reproduced",
        close(fresh.certificate.l_fwd, rep.certificate.l_fwd),
    );
    check(
        "certificate L_inv reproduced",
        close(fresh.certificate.l_inv, rep.certificate.l_inv),
    );
    check(
        "certificate alpha_reg reproduced",
        close(fresh.certificate.alpha_reg, rep.certificate.alpha_reg),
    );
    check(
        "sampled constants within certificate",
        fresh.bilipschitz.sampled_l_fwd <= fresh.certificate.l_fwd * 1.01
            && fresh.bilipschitz.sampled_l_inv <= fresh.certificate.l_inv * 1.01,
    );
    check("round trip within 1e-6", fresh.round_trip_worst <= 1e-6);
    Ok(ok)
}
