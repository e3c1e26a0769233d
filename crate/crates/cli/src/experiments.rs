//! One function per experiment kind; each fills an [`Outputs`] directory.

use hyperloc::cocycle::{fiber_bunching_certificate, stable_holonomy, unstable_holonomy};
use hyperloc::green::{eigensystem, green_bound_check_diagonal, green_table_diagonal, TridiagonalOperator};
use hyperloc::localization::{
    double_resonance_events, double_resonance_frequency, dynamical_decay, finite_green_decay_check, localization_profile,
    ResonanceCaps,
};
use hyperloc::lyapunov::{
    deviation_probability, estimate_lyapunov, ldt_rate_fit, lyapunov_curve, LyapunovCurve, PotentialModel, FLAG_FLOOR,
};
use hyperloc::rng::{replica_seed, rng_from_seed};
use hyperloc::sampling::SiteFunction;
use hyperloc::symbolic::{wedge, SymbolWindow};
use hyperloc::ustate::{approximate_u_state, furstenberg_integral, SchrodingerCocycle, UStateOptions};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Context, RunError};
use crate::output::{line_chart, num, Outputs, Series, Table};

// Stream tags keeping the random streams of different stages apart.
const TAG_REFERENCE: u64 = 1 << 40;
const TAG_DEVIATION: u64 = 2 << 40;
const TAG_PARTNER: u64 = 3 << 40;

pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    match kind {
        ExperimentKind::Lyapunov => lyapunov(cfg, out),
        ExperimentKind::Ldt => ldt(cfg, out),
        ExperimentKind::Ustate => ustate(cfg, out),
        ExperimentKind::Spectrum => spectrum(cfg, out),
        ExperimentKind::Green => green(cfg, out),
        ExperimentKind::Localize => localize(cfg, out),
        ExperimentKind::DoubleResonance => double_resonance(cfg, out),
        ExperimentKind::Holonomy => holonomy(cfg, out),
    }
}

fn svg_enabled(cfg: &ExperimentConfig) -> bool {
    cfg.svg.unwrap_or(true)
}

fn reference_curve(
    cfg: &ExperimentConfig,
    model: &dyn PotentialModel,
    energies: &[f64],
) -> Result<LyapunovCurve, RunError> {
    lyapunov_curve(
        model,
        energies,
        cfg.reference_n.unwrap_or(10_000),
        cfg.reference_replicas.unwrap_or(50),
        replica_seed(cfg.seed, TAG_REFERENCE),
        FLAG_FLOOR,
    )
    .ctx("reference Lyapunov curve")
}

fn lyapunov(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let model = cfg.model()?;
    let energies = cfg.energy_grid(41)?;
    let curve = lyapunov_curve(
        model.as_ref(),
        &energies,
        cfg.n.unwrap_or(10_000),
        cfg.replicas.unwrap_or(200),
        cfg.seed,
        FLAG_FLOOR,
    )
    .ctx("lyapunov curve")?;
    let mut t = Table::new(&["E", "estimate", "std_error", "flagged"]);
    for i in 0..curve.energies.len() {
        t.push(vec![
            num(curve.energies[i]),
            num(curve.estimates[i]),
            num(curve.std_errors[i]),
            curve.flagged[i].to_string(),
        ]);
    }
    out.write_table("lyapunov_curve.csv", &t)?;
    if svg_enabled(cfg) {
        let pts = curve.energies.iter().copied().zip(curve.estimates.iter().copied()).collect();
        let svg = line_chart("Lyapunov exponent", "E", "L(E)", &[Series { name: "estimate".into(), points: pts }]);
        out.write_bytes("lyapunov_curve.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn ldt(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let model = cfg.model()?;
    let energies = cfg.energy_grid(5)?;
    let n_values = cfg.n_values.clone().unwrap_or_else(|| vec![50, 100, 200, 400]);
    let replicas = cfg.replicas.unwrap_or(10_000);
    let epsilon = cfg.epsilon.unwrap_or(0.1);
    let reference = reference_curve(cfg, model.as_ref(), &energies)?;
    let mut dev = Table::new(&["E", "epsilon", "n", "p_hat", "ci_lo", "ci_hi"]);
    let mut fits = Table::new(&["c", "logC", "r_squared"]);
    let mut series = Vec::new();
    for (i, &e) in energies.iter().enumerate() {
        let l_ref = reference.estimates[i];
        let points = n_values
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let seed = replica_seed(cfg.seed, TAG_DEVIATION + (i * n_values.len() + j) as u64);
                deviation_probability(model.as_ref(), e, n, epsilon, l_ref, replicas, seed)
            })
            .collect::<hyperloc::Result<Vec<_>>>()
            .ctx("deviation probabilities")?;
        for p in &points {
            dev.push(vec![num(e), num(epsilon), p.n.to_string(), num(p.p_hat), num(p.ci_lo), num(p.ci_hi)]);
        }
        let report = ldt_rate_fit(e, epsilon, &points).ctx("rate fit")?;
        match report.fit {
            Some(f) => fits.push(vec![num(f.c), num(f.log_c), num(f.r_squared)]),
            None => fits.push(vec![String::new(), String::new(), String::new()]),
        }
        series.push(Series {
            name: format!("E = {e}"),
            points: points.iter().filter(|p| p.p_hat > 0.0).map(|p| (p.n as f64, p.p_hat.ln())).collect(),
        });
    }
    out.write_table("deviation.csv", &dev)?;
    out.write_table("fit_summary.csv", &fits)?;
    if svg_enabled(cfg) {
        let svg = line_chart("Deviation probabilities", "n", "log p", &series);
        out.write_bytes("deviation.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn ustate(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let model = cfg.shift_model()?;
    let energies = cfg.energy_grid(5)?;
    let spec = cfg.ustate.clone();
    let d = UStateOptions::default();
    let opts = UStateOptions {
        depth: spec.as_ref().and_then(|s| s.depth).unwrap_or(d.depth),
        grid: spec.as_ref().and_then(|s| s.grid).unwrap_or(d.grid),
        max_iters: spec.as_ref().and_then(|s| s.max_iters).unwrap_or(d.max_iters),
        tol: spec.as_ref().and_then(|s| s.tol).unwrap_or(d.tol),
    };
    let mut t = Table::new(&["E", "birkhoff", "birkhoff_se", "furstenberg", "iterations", "residual"]);
    for (i, &e) in energies.iter().enumerate() {
        let cocycle = SchrodingerCocycle::new(&model.f, e);
        let state = approximate_u_state(&model.measure, &cocycle, &opts).ctx("u-state iteration")?;
        let integral = furstenberg_integral(&state.measure, &model.measure, &cocycle).ctx("Furstenberg integral")?;
        let birkhoff = estimate_lyapunov(
            &model,
            e,
            cfg.n.unwrap_or(10_000),
            cfg.replicas.unwrap_or(100),
            replica_seed(cfg.seed, i as u64),
        )
        .ctx("Birkhoff estimate")?;
        out.write_bytes(&format!("ustate_{i}.csv"), state.measure.to_csv().as_bytes())?;
        t.push(vec![
            num(e),
            num(birkhoff.estimate),
            num(birkhoff.std_error),
            num(integral),
            state.iterations.to_string(),
            num(state.residual),
        ]);
    }
    out.write_table("furstenberg.csv", &t)?;
    Ok(())
}

fn sampled_operator(cfg: &ExperimentConfig, default_n: usize) -> Result<TridiagonalOperator, RunError> {
    let model = cfg.model()?;
    let n = cfg.n.unwrap_or(default_n);
    let mut rng = rng_from_seed(cfg.seed);
    let v = model.sample_potential(n, &mut rng).ctx("potential")?;
    TridiagonalOperator::from_diagonal(v, 0).ctx("operator")
}

fn spectrum(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let h = sampled_operator(cfg, 200)?;
    let sd = eigensystem(&h, 1e-9).ctx("eigensystem")?;
    let mut op = Table::new(&["index", "diagonal"]);
    for (i, v) in h.diagonal().iter().enumerate() {
        op.push(vec![(h.origin() + i as i64).to_string(), num(*v)]);
    }
    let mut sp = Table::new(&["k", "eigenvalue"]);
    for (k, e) in sd.eigenvalues.iter().enumerate() {
        sp.push(vec![k.to_string(), num(*e)]);
    }
    out.write_table("operator.csv", &op)?;
    out.write_table("spectrum.csv", &sp)?;
    if svg_enabled(cfg) {
        let n = sd.eigenvalues.len() as f64;
        let pts = sd.eigenvalues.iter().enumerate().map(|(k, &e)| (e, (k + 1) as f64 / n)).collect();
        let svg = line_chart("Eigenvalue counting function", "E", "fraction below E", &[Series { name: "box".into(), points: pts }]);
        out.write_bytes("spectrum.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn green(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let h = sampled_operator(cfg, 40)?;
    let energies = cfg.energy_grid(3)?;
    let mut bounds = Table::new(&["E", "worst_relative_slack", "worst_j", "worst_k", "distance_to_spectrum"]);
    for (i, &e) in energies.iter().enumerate() {
        let g = green_table_diagonal(h.diagonal(), e).ctx("Green table")?;
        let mut t = Table::new(&["j", "k", "value", "log_magnitude"]);
        for j in 0..g.size {
            for k in 0..g.size {
                let x = g.get(j, k);
                t.push(vec![j.to_string(), k.to_string(), num(x.value()), num(x.log_abs)]);
            }
        }
        out.write_table(&format!("green_{i}.csv"), &t)?;
        let b = green_bound_check_diagonal(h.diagonal(), e).ctx("Green bound")?;
        bounds.push(vec![
            num(e),
            num(b.worst_relative_slack),
            b.worst_pair.0.to_string(),
            b.worst_pair.1.to_string(),
            num(g.distance_to_spectrum),
        ]);
    }
    out.write_table("green_bound.csv", &bounds)?;

    // the finite-volume decay check needs the symbolic point behind the potential
    if cfg.is_shift() {
        let model = cfg.shift_model()?;
        let n = h.len();
        let w = model.sample_window(n, &mut rng_from_seed(cfg.seed)).ctx("sampling")?;
        let reference = reference_curve(cfg, &model, &energies)?;
        let epsilon = cfg.epsilon.unwrap_or(0.1);
        let c0 = cfg.c0.unwrap_or(5.0);
        let mut t = Table::new(&[
            "E",
            "L_ref",
            "epsilon",
            "c0",
            "worst_log_margin",
            "worst_j",
            "worst_k",
            "holds",
            "transfer_bound_holds",
        ]);
        for (i, &e) in energies.iter().enumerate() {
            let l = reference.estimates[i];
            let r = finite_green_decay_check(&model.f, &w, e, n, 0, l, epsilon, c0).ctx("Green decay check")?;
            t.push(vec![
                num(e),
                num(l),
                num(epsilon),
                num(c0),
                num(r.worst_log_margin),
                r.worst_pair.0.to_string(),
                r.worst_pair.1.to_string(),
                r.holds.to_string(),
                r.transfer_bound_holds.to_string(),
            ]);
        }
        out.write_table("green_decay.csv", &t)?;
    }
    Ok(())
}

fn localize(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let model = cfg.model()?;
    let [lo, hi] = cfg.interval.unwrap_or([-0.5, 0.5]);
    let grid = match cfg.energies {
        Some(_) => cfg.energy_grid(21)?,
        None => hyperloc::cocycle::EnergyInterval::new(lo, hi).ctx("interval")?.grid(21),
    };
    let curve = reference_curve(cfg, model.as_ref(), &grid)?;
    let flagged = curve.flagged_energies();
    let l_ref = |e: f64| curve.interpolate(e);
    let n = cfg.n.unwrap_or(400);
    let profile = localization_profile(
        model.as_ref(),
        n,
        (lo, hi),
        &flagged,
        cfg.eta.unwrap_or(0.05),
        cfg.samples.unwrap_or(50),
        cfg.bins.unwrap_or(5),
        cfg.seed,
        &l_ref,
    )
    .ctx("localization profile")?;
    let mut t = Table::new(&["E_bin", "median_rate", "L_ref", "count"]);
    for b in &profile.bins {
        t.push(vec![num(0.5 * (b.e_lo + b.e_hi)), num(b.median_rate), num(b.l_ref), b.count.to_string()]);
    }
    out.write_table("profile.csv", &t)?;
    let mut fits = Table::new(&["E", "center", "rate", "fit_residual", "L_at_E"]);
    for f in &profile.fits {
        fits.push(vec![num(f.energy), f.center.to_string(), num(f.rate), num(f.fit_residual), num(f.l_at_e)]);
    }
    out.write_table("decay_fits.csv", &fits)?;

    // dynamical probe on the first sample, started from the middle of the box
    let mut rng = rng_from_seed(replica_seed(cfg.seed, 0));
    let v = model.sample_potential(n, &mut rng).ctx("potential")?;
    let sd = eigensystem(&TridiagonalOperator::from_diagonal(v, 0).ctx("operator")?, 1e-9).ctx("eigensystem")?;
    let times: Vec<f64> = (0..=50).map(|t| t as f64).collect();
    let probe = match dynamical_decay(&sd, (lo, hi), n / 2, &times, 1e-14) {
        Ok((p, _)) => p,
        Err(e) if !e.is_numerical() => vec![0.0; n],
        Err(e) => return Err(RunError::from_core("dynamical probe", e)),
    };
    let mut p = Table::new(&["site", "probe"]);
    for (s, x) in probe.iter().enumerate() {
        p.push(vec![s.to_string(), num(*x)]);
    }
    out.write_table("probe.csv", &p)?;
    if svg_enabled(cfg) {
        let centers: Vec<(f64, f64, f64)> =
            profile.bins.iter().map(|b| (0.5 * (b.e_lo + b.e_hi), b.median_rate, b.l_ref)).collect();
        let svg = line_chart(
            "Eigenfunction decay",
            "E",
            "rate",
            &[
                Series { name: "median decay rate".into(), points: centers.iter().map(|c| (c.0, c.1)).collect() },
                Series { name: "L(E)".into(), points: centers.iter().map(|c| (c.0, c.2)).collect() },
            ],
        );
        out.write_bytes("profile.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn caps(cfg: &ExperimentConfig) -> ResonanceCaps {
    let d = ResonanceCaps::default();
    match &cfg.caps {
        None => d,
        Some(c) => ResonanceCaps {
            half_widths: c.half_widths.clone().unwrap_or(d.half_widths),
            box_cap: c.box_cap.unwrap_or(d.box_cap),
            r_count: c.r_count.unwrap_or(d.r_count),
            r_floor: c.r_floor.unwrap_or(d.r_floor),
            r_cap: c.r_cap.unwrap_or(d.r_cap),
            s_values: c.s_values.clone().unwrap_or(d.s_values),
        },
    }
}

fn double_resonance(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let model = cfg.shift_model()?;
    let [lo, hi] = cfg.interval.unwrap_or([-1.0, 1.0]);
    let interval = hyperloc::cocycle::EnergyInterval::new(lo, hi).ctx("interval")?;
    let energies = match cfg.energies {
        Some(_) => cfg.energy_grid(201)?,
        None => interval.grid(((hi - lo) / 0.01).round() as usize + 1),
    };
    let curve = reference_curve(cfg, &model, &interval.grid(21))?;
    let l_ref = |e: f64| curve.interpolate(e);
    let epsilon = cfg.epsilon.unwrap_or(0.2);
    let ks = cfg.k_values.clone().unwrap_or_else(|| vec![2, 3, 4]);
    let caps = caps(cfg);
    let freq = double_resonance_frequency(&model, epsilon, &ks, &energies, &caps, cfg.samples.unwrap_or(1000), cfg.seed, &l_ref)
        .ctx("double-resonance frequency")?;
    let mut t = Table::new(&["K", "hits", "samples", "p_hat", "ci_lo", "ci_hi"]);
    for q in &freq {
        t.push(vec![q.k.to_string(), q.hits.to_string(), q.samples.to_string(), num(q.p_hat), num(q.ci_lo), num(q.ci_hi)]);
    }
    out.write_table("frequency.csv", &t)?;
    let events = double_resonance_events(&model, epsilon, &ks, &energies, &caps, cfg.event_samples.unwrap_or(10), cfg.seed, &l_ref)
        .ctx("double-resonance scan")?;
    let mut ev = Table::new(&["omega_seed", "s", "K", "N1", "N2", "E", "r", "m", "green_norm", "g_m_value"]);
    for (seed, e) in &events {
        ev.push(vec![
            seed.to_string(),
            e.s.to_string(),
            e.k.to_string(),
            e.n1.to_string(),
            e.n2.to_string(),
            num(e.energy),
            e.r.to_string(),
            e.m.to_string(),
            num(e.green_norm),
            num(e.g_m_value),
        ]);
    }
    out.write_table("events.csv", &ev)?;
    Ok(())
}

/// A point agreeing with `w` at coordinate 0 drawn from stream `tag`.
fn partner(cfg: &ExperimentConfig, m: &hyperloc::ShiftMeasure, w: &SymbolWindow, tag: u64) -> Result<SymbolWindow, RunError> {
    let s0 = w.get(0).expect("window covers 0");
    for k in 0..10_000u64 {
        let o = m.sample_window(w.start(), w.end(), replica_seed(cfg.seed, TAG_PARTNER + tag * 10_000 + k)).ctx("sampling")?;
        if o.get(0) == Some(s0) {
            return Ok(o);
        }
    }
    Err(RunError::Numerical("could not draw a point with the same symbol at 0".into()))
}

fn holonomy(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let model = cfg.shift_model()?;
    let energies = cfg.energy_grid(5)?;
    let alpha = cfg.alpha.unwrap_or(1.0);
    let mut b = Table::new(&["alpha", "certified", "N", "margin"]);
    match fiber_bunching_certificate(&model.f, alpha, &energies, 12) {
        Ok(Some(c)) => b.push(vec![num(alpha), "true".into(), c.n.to_string(), num(c.margin)]),
        Ok(None) => b.push(vec![num(alpha), "false".into(), String::new(), String::new()]),
        Err(hyperloc::Error::TooManyWords { .. }) => b.push(vec![num(alpha), "false".into(), String::new(), String::new()]),
        Err(e) => return Err(RunError::from_core("fiber bunching", e)),
    }
    out.write_table("bunching.csv", &b)?;

    let depth = 64 + 2 * model.f.radius() as i64;
    let mut t = Table::new(&["pair", "direction", "E", "h11", "h12", "h21", "h22", "stabilized_at", "achieved"]);
    for pair in 0..cfg.replicas.unwrap_or(10) {
        let w = model.measure.sample_window(-depth, depth, replica_seed(cfg.seed, pair as u64)).ctx("sampling")?;
        let o = partner(cfg, &model.measure, &w, pair as u64)?;
        let stable = wedge(&o, &w).ctx("wedge")?;
        let unstable = wedge(&w, &o).ctx("wedge")?;
        for &e in &energies {
            for (dir, h) in [
                ("stable", stable_holonomy(&model.f, &w, &stable, e, 1e-10, 1000)),
                ("unstable", unstable_holonomy(&model.f, &w, &unstable, e, 1e-10, 1000)),
            ] {
                let h = h.ctx("holonomy")?;
                t.push(vec![
                    pair.to_string(),
                    dir.into(),
                    num(e),
                    num(h.matrix.a),
                    num(h.matrix.b),
                    num(h.matrix.c),
                    num(h.matrix.d),
                    h.stabilized_at.to_string(),
                    num(h.achieved),
                ]);
            }
        }
    }
    out.write_table("holonomy.csv", &t)?;
    Ok(())
}
