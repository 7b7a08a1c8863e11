use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::args::*;
use super::{CliResult, Failure, Outputs};
use crate::beltrami::BeltramiCoefficient;
use crate::bloch::{
    beta_integral_means, lil_estimate, radius, rescaled_boundary_samples, sigma2_radial, sigma2_radial_ladder,
    theta_count, Constant, Domain, ExpTransplant, Lacunary, SharedEvaluator, ThetaSampling,
};
use crate::bridge::{martingale_from_bloch, BridgeOptions, BridgeReport};
use crate::clt::{clt_check, good_bad_partition, histogram_csv};
use crate::martingale::{
    martingale_stats, random_martingale, read_binary, write_binary, JumpLaw, MartingaleRecord, PAdicMartingale,
};
use crate::search::{s_sharp_halfplane, BoxObjective, Optimizer, SearchConfig, SearchState};
use crate::selftest::{Selftest, CRITERIA};
use crate::spectrum::fmt17;
use crate::{Error, SpectrumEstimate};

pub fn dispatch(command: &Command, out: &mut Outputs) -> CliResult<()> {
    match command {
        Command::Martingale(a) => martingale(a, out),
        Command::Variance(a) => variance(a, out),
        Command::Ims(a) => ims(a, out),
        Command::Lil(a) => lil(a, out),
        Command::Box(a) => bridge(a, out, false),
        Command::Bridge(a) => bridge(a, out, true),
        Command::Search(a) => search(a, out),
        Command::Clt(a) => clt(a, out),
        Command::Selftest(a) => selftest(a, out),
    }
}

fn json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value).map_err(Error::from)? + "\n")
}

fn martingale(a: &MartingaleArgs, out: &mut Outputs) -> CliResult<()> {
    let m = match &a.input {
        Some(path) => load_martingale(path)?,
        None => {
            let law = match a.law {
                Law::Zeros => JumpLaw::Zeros,
                Law::Rademacher => JumpLaw::Rademacher,
                Law::UnitRoots => JumpLaw::UnitRoots,
                Law::UniformReal => JumpLaw::UniformReal { scale: a.scale },
                Law::UniformComplex => JumpLaw::UniformComplex { radius: a.scale },
                Law::Mixed => JumpLaw::Mixed {
                    amplitude_seed: a.amplitude_seed.or(a.seed).unwrap_or(0),
                },
            };
            let seed = match (a.seed, a.law) {
                (Some(s), _) => s,
                (None, Law::Zeros) => 0,
                (None, _) => return Err(Failure::usage("--seed is required for a stochastic law")),
            };
            random_martingale(seed, a.p, a.depth, &law)?
        }
    };
    let defect = m.check_averaging(1e-9)?;
    let stats = martingale_stats(&m, &a.taus)?;
    let mut csv = String::from("key,value\n");
    let mut row = |k: &str, v: f64| csv.push_str(&format!("{k},{}\n", fmt17(v)));
    row("sigma2", stats.sigma2);
    if let Some(l) = stats.lil_estimate {
        row("lil_estimate", l);
    }
    for (t, b) in &stats.beta {
        row(&format!("beta({})", fmt17(*t)), *b);
    }
    row("local_var_min", stats.local_var_min);
    row("local_var_max", stats.local_var_max);
    row("averaging_defect", defect);
    out.write("stats.csv", &csv)?;
    out.write("stats.json", &json(&stats)?)?;
    if a.save {
        write_binary(&m, BufWriter::new(File::create(out.path("martingale.bin"))?))?;
        out.record("martingale.bin");
        out.write("martingale.json", &json(&MartingaleRecord::from(&m))?)?;
    }
    Ok(())
}

fn load_martingale(path: &std::path::Path) -> CliResult<PAdicMartingale> {
    let file = File::open(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let record: MartingaleRecord = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))?;
        Ok(PAdicMartingale::try_from(record)?)
    } else {
        Ok(read_binary(BufReader::new(file))?)
    }
}

/// The family as a disk function, resolved down to heights `y_min` on ℍ.
fn disk_function(f: &FamilyArgs, y_min: f64) -> CliResult<SharedEvaluator> {
    let zero = Complex64::new(0.0, 0.0);
    Ok(match f.family {
        Family::Lacunary => Arc::new(Lacunary::standard(f.terms)),
        Family::LacunaryRandom => {
            let seed = f.seed.ok_or_else(|| Failure::usage("--family lacunary-random needs --seed"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coeffs = (0..f.terms).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..TAU))).collect();
            Arc::new(Lacunary::new(coeffs, 2))
        }
        Family::Constant => Arc::new(Constant { value: Complex64::new(1.0, 0.0), domain: Domain::Disk }),
        Family::Zero => Arc::new(Constant { value: zero, domain: Domain::Disk }),
        Family::Search => {
            let path = f.coefficients.as_ref().ok_or_else(|| Failure::usage("--family search needs --coefficients"))?;
            let mu = match BeltramiCoefficient::read_json(path)? {
                BeltramiCoefficient::Strip(mu) => mu,
                BeltramiCoefficient::Disk(_) => return Err(Failure::usage("--family search needs a strip coefficient")),
            };
            Arc::new(s_sharp_halfplane(&mu, y_min)?.inner().clone())
        }
    })
}

/// Height on ℍ matching the circle of radius `r` under `z ↦ e^{2πiz}`.
fn height_of_radius(r: f64) -> f64 {
    -r.ln() / TAU
}

fn ladder_js(a: &LadderArgs) -> CliResult<Vec<u32>> {
    if a.step == 0 || a.rmin_j > a.rmax_j {
        return Err(Failure::usage("need --step >= 1 and --rmin-j <= --rmax-j"));
    }
    Ok((a.rmin_j..=a.rmax_j).step_by(a.step as usize).collect())
}

fn write_estimate(out: &mut Outputs, stem: &str, e: &SpectrumEstimate) -> CliResult<()> {
    out.write(&format!("{stem}.csv"), &e.to_csv())?;
    out.write(&format!("{stem}.json"), &(e.to_json() + "\n"))
}

fn variance(a: &LadderArgs, out: &mut Outputs) -> CliResult<()> {
    let js = ladder_js(a)?;
    let b = disk_function(&a.family, height_of_radius(radius(a.rmax_j)))?;
    let e = sigma2_radial_ladder(&*b, &js, a.n_theta)?;
    write_estimate(out, "variance", &e)
}

fn ims(a: &ImsArgs, out: &mut Outputs) -> CliResult<()> {
    let js = ladder_js(&a.ladder)?;
    let b = disk_function(&a.ladder.family, height_of_radius(radius(a.ladder.rmax_j)))?;
    let e = beta_integral_means(&*b, Complex64::new(a.t, a.t_imag), &js, a.ladder.n_theta)?;
    write_estimate(out, "ims", &e)
}

fn lil(a: &LadderArgs, out: &mut Outputs) -> CliResult<()> {
    let js = ladder_js(a)?;
    let b = disk_function(&a.family, height_of_radius(radius(a.rmax_j)))?;
    let e = lil_estimate(&*b, a.n_theta.unwrap_or_else(|| theta_count(a.rmax_j)), &js)?;
    write_estimate(out, "lil", &e)
}

fn bridge(a: &BridgeArgs, out: &mut Outputs, full: bool) -> CliResult<()> {
    let max_n = a.orders.iter().copied().max().ok_or_else(|| Failure::usage("--n needs at least one order"))?;
    if a.level + max_n > a.depth {
        return Err(Failure::usage(format!(
            "depth shortfall: level {} + n {max_n} exceeds --depth {}",
            a.level, a.depth
        )));
    }
    let opts = BridgeOptions::new(a.depth);
    let y_min = opts.leaf_height().min((-((a.level + max_n) as f64)).exp2());
    let disk = disk_function(&a.family, y_min)?;
    let b: SharedEvaluator = match a.domain {
        ModelDomain::Halfplane => Arc::new(ExpTransplant::new(disk)),
        ModelDomain::Disk => disk,
    };
    let bm = martingale_from_bloch(&*b, &opts)?;
    bm.martingale.check_averaging(1e-9)?;
    let report = BridgeReport::build(&*b, &bm, a.level, &a.orders, a.quadrature)?;

    let mut greens = String::from("level,offset,interval_length,n,martingale_side,box_side,defect\n");
    for r in &report.greens {
        greens.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.level,
            r.offset,
            fmt17(r.interval_length),
            r.n,
            fmt17(r.martingale_side),
            fmt17(r.box_side),
            fmt17(r.defect)
        ));
    }
    out.write("greens.csv", &greens)?;
    if !full {
        return out.write("greens.json", &json(&report.greens)?);
    }
    let mut cx = String::from("level,offset,n,variance_defect,covariance_defect\n");
    for r in &report.complexification {
        cx.push_str(&format!(
            "{},{},{},{},{}\n",
            r.level,
            r.offset,
            r.n,
            fmt17(r.variance_defect),
            fmt17(r.covariance_defect)
        ));
    }
    out.write("complexification.csv", &cx)?;
    let mut adj = String::from("level,adjacency,fidelity\n");
    for (k, v) in &report.adjacency_by_depth {
        let fid = report.fidelity_by_level.get(*k).copied().unwrap_or(f64::NAN);
        adj.push_str(&format!("{k},{},{}\n", fmt17(*v), fmt17(fid)));
    }
    out.write("levels.csv", &adj)?;
    out.write("report.json", &(report.to_json() + "\n"))
}

fn search(a: &SearchArgs, out: &mut Outputs) -> CliResult<()> {
    let (mut state, form) = match &a.resume {
        Some(path) => {
            if !path.exists() {
                return Err(Failure::usage(format!("checkpoint {} not found", path.display())));
            }
            let s = SearchState::read_checkpoint(path)?;
            let form = BoxObjective::new(s.config.order, s.config.tile_depth, s.config.box_order)?;
            (s, form)
        }
        None => {
            let seed = a.seed.ok_or_else(|| Failure::usage("--seed is required (or --resume)"))?;
            let mut cfg = SearchConfig::new(a.order, a.tile_depth, a.iters, seed);
            cfg.box_order = a.box_order.unwrap_or(a.order);
            cfg.unimodular = !a.free_magnitude;
            if a.optimizer == OptimizerKind::Anneal {
                cfg.optimizer = Optimizer::Annealing { initial_temperature: a.t0, cooling: a.cooling, step: a.step };
            }
            cfg.validate()?;
            let form = BoxObjective::new(cfg.order, cfg.tile_depth, cfg.box_order)?;
            (SearchState::initial(cfg, &form)?, form)
        }
    };
    let mut left = a.iters;
    while left > 0 {
        let k = if a.checkpoint_every > 0 { a.checkpoint_every.min(left) } else { left };
        state.advance(&form, k);
        left -= k;
        if a.checkpoint_every > 0 && left > 0 {
            state.config.iterations = state.iteration;
            state.write_checkpoint(&out.path("checkpoint.json"))?;
        }
    }
    // a resumed run then reads exactly like an uninterrupted one
    state.config.iterations = state.iteration;
    state.write_checkpoint(&out.path("checkpoint.json"))?;
    out.record("checkpoint.json");
    let result = state.result(&form)?;
    out.write("result.json", &json(&result)?)?;
    out.write("history.csv", &result.history_csv())?;
    out.write("best_coefficient.json", &json(&BeltramiCoefficient::Strip(result.best.clone()).to_file())?)?;
    if !result.ceiling_respected {
        return Err(Failure::invariant(format!("objective {} exceeded the ceiling", fmt17(result.max_evaluated))));
    }
    Ok(())
}

/// `δ₂` of the bad-mass table, as fractions of `Σ̂²`.
const BAD_MASS_FRACTIONS: [f64; 4] = [0.1, 0.2, 0.3, 0.5];
const BAD_MASS_WINDOW: usize = 4;

fn clt(a: &CltArgs, out: &mut Outputs) -> CliResult<()> {
    let r = radius(a.j);
    let opts = BridgeOptions::new(a.bad_mass_depth);
    let mut y_min = height_of_radius(r);
    if a.bad_mass_depth > 0 {
        y_min = y_min.min(opts.leaf_height());
    }
    let b = disk_function(&a.family, y_min)?;
    let sigma2 = match a.sigma2 {
        Some(s) => s,
        None => sigma2_radial(&*b, r, theta_count(a.j))?,
    };
    let sampling = if a.uniform { ThetaSampling::Uniform } else { ThetaSampling::Jittered { seed: a.sample_seed } };
    let mut report = clt_check(&*b, r, a.samples, sigma2, sampling)?;
    if a.bad_mass_depth > 0 {
        let h = ExpTransplant::new(b.clone());
        let bm = martingale_from_bloch(&h, &opts)?;
        let window = BAD_MASS_WINDOW.min(a.bad_mass_depth);
        let parts = BAD_MASS_FRACTIONS
            .iter()
            .map(|f| good_bad_partition(&bm.martingale, window, f * sigma2, sigma2))
            .collect::<crate::Result<Vec<_>>>()?;
        report = report.with_bad_mass(&parts);
    }
    out.write("report.json", &(report.to_json()? + "\n"))?;
    let z = rescaled_boundary_samples(&*b, r, a.samples, sampling)?;
    let re: Vec<f64> = z.iter().map(|w| w.re).collect();
    let im: Vec<f64> = z.iter().map(|w| w.im).collect();
    out.write("hist_re.csv", &histogram_csv(&re, a.bins)?)?;
    out.write("hist_im.csv", &histogram_csv(&im, a.bins)?)
}

fn selftest(a: &SelftestArgs, out: &mut Outputs) -> CliResult<()> {
    let ids: Vec<u32> = if a.criteria.is_empty() { (1..=CRITERIA).collect() } else { a.criteria.clone() };
    if let Some(bad) = ids.iter().find(|i| !(1..=CRITERIA).contains(*i)) {
        return Err(Failure::usage(format!("no criterion {bad} (1..={CRITERIA})")));
    }
    let suite = Selftest::new(a.seed);
    let mut outcomes = Vec::new();
    for id in ids {
        let o = suite.run(id);
        println!("{}", o.line());
        for n in &o.notes {
            println!("             note: {n}");
        }
        outcomes.push(o);
    }
    Selftest::write_artifacts(&outcomes, &out.dir)?;
    for o in &outcomes {
        out.record(&format!("criterion_{:02}.json", o.id));
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("failed criteria: {failed:?}");
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::invariant(format!("failed criteria: {failed:?}")))
    }
}
