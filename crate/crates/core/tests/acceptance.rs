//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion before asserting, so `cargo test --test acceptance -- --nocapture`
//! gives a one-screen summary.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uuv_hybrid::estimation::NoiseConfig;
use uuv_hybrid::shunting::{shunting_step, ShuntingParams, ShuntingState};
use uuv_hybrid::sim::{run, ControllerVariant, SimConfig, SimTrace};
use uuv_hybrid::vehicle::{rk4_step, BodyVelocity, Pose, Torque, VehicleParams, VehicleState};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id} [{verdict}] {name}: {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn simulate(preset: &str, variant: &str) -> SimTrace {
    let cfg = SimConfig::preset(preset, variant.parse().unwrap()).unwrap();
    let start = Instant::now();
    let trace = run(&cfg).unwrap_or_else(|e| panic!("{preset} {variant}: {e}"));
    eprintln!("{preset} {variant}: {} steps in {:?}", trace.rows.len() - 1, start.elapsed());
    trace
}

fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * std::f64::consts::PI);
    if w > std::f64::consts::PI {
        w - 2.0 * std::f64::consts::PI
    } else {
        w
    }
}

/// Total variation per unit time, per axis.
fn total_variation_rate(series: impl Fn(usize) -> [f64; 3], n: usize, dt: f64) -> [f64; 3] {
    let mut tv = [0.0; 3];
    for k in 1..n {
        let (a, b) = (series(k - 1), series(k));
        for i in 0..3 {
            tv[i] += (b[i] - a[i]).abs();
        }
    }
    tv.map(|x| x / ((n - 1) as f64 * dt))
}

fn torque_tv(trace: &SimTrace) -> [f64; 3] {
    let r = &trace.rows;
    total_variation_rate(
        |k| [r[k].applied_torque.tau_x, r[k].applied_torque.tau_y, r[k].applied_torque.tau_n],
        r.len(),
        trace.config.scenario.dt,
    )
}

fn command_tv(trace: &SimTrace) -> [f64; 3] {
    let r = &trace.rows;
    total_variation_rate(
        |k| [r[k].command.u_c, r[k].command.v_c, r[k].command.r_c],
        r.len(),
        trace.config.scenario.dt,
    )
}

#[test]
fn criterion_1_shunting_boundedness() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dt = 0.01;
    let mut steps = 0u64;
    let mut escapes = 0u64;
    while steps < 1_000_000 {
        let p = ShuntingParams::new(rng.random_range(0.1..50.0), rng.random_range(0.05..10.0), rng.random_range(0.05..10.0));
        let mut s = ShuntingState::new(rng.random_range(-p.d * 0.999..p.b * 0.999));
        for _ in 0..1000 {
            let e = rng.random_range(-100.0..100.0);
            s = shunting_step(s, &p, e, dt).expect("step within the stability region");
            if !(s.activity > -p.d && s.activity < p.b) {
                escapes += 1;
            }
            steps += 1;
        }
    }
    report(1, "shunting boundedness", escapes == 0, &format!("{steps} random steps, {escapes} outside (-D, B)"));
}

#[test]
fn criterion_2_speed_jump_elimination() {
    let conv = simulate("straight", "conv_bs+sat_smc");
    let u_c0 = conv.rows[0].command.u_c;

    let mut worst: f64 = 0.0;
    let mut worst_yaw: f64 = 0.0;
    let mut ok = true;
    for preset in ["straight", "circle", "circle_noisy"] {
        for variant in ["bio_bs+bio_smc", "bio_bs+sign_smc", "bio_bs+sat_smc"] {
            let trace = simulate(preset, variant);
            let k = &trace.config.kinematic;
            let bound_xy = k.k_a * (k.shunting[0].b + k.shunting[1].b);
            let bound_yaw = k.k_b * k.shunting[2].b;
            for row in &trace.rows {
                let [fu, fv, fr] = row.feedback;
                worst = worst.max(fu.abs()).max(fv.abs());
                worst_yaw = worst_yaw.max(fr.abs());
                ok &= fu.abs() < bound_xy && fv.abs() < bound_xy && fr.abs() < bound_yaw;
            }
        }
    }
    let pass = u_c0 > 6.0 && ok;
    report(
        2,
        "speed-jump elimination",
        pass,
        &format!("conventional u_c(0) = {u_c0:.4} (> 6); bioinspired max |feedback| = {worst:.4} (< 4), yaw {worst_yaw:.4} (< 1)"),
    );
}

#[test]
fn criterion_3_chattering_suppression() {
    let mut pass = true;
    let mut detail = Vec::new();
    for preset in ["straight", "circle"] {
        let bio = torque_tv(&simulate(preset, "bio_bs+bio_smc"));
        let sign = torque_tv(&simulate(preset, "bio_bs+sign_smc"));
        let sat = torque_tv(&simulate(preset, "bio_bs+sat_smc"));
        for i in 0..3 {
            pass &= bio[i] <= 0.1 * sign[i];
        }
        pass &= sat[2] > bio[2];
        detail.push(format!(
            "{preset}: bio [{:.3}, {:.3}, {:.4}] sign [{:.1}, {:.1}, {:.1}] sat yaw {:.3}",
            bio[0], bio[1], bio[2], sign[0], sign[1], sign[2], sat[2]
        ));
    }
    report(3, "chattering suppression", pass, &detail.join("; "));
}

fn settle_time(trace: &SimTrace, threshold: f64) -> Option<f64> {
    let mut settled_at = None;
    for row in &trace.rows {
        let err = ((row.truth.pose.x - row.reference.pose.x).powi(2) + (row.truth.pose.y - row.reference.pose.y).powi(2)).sqrt();
        if err < threshold {
            settled_at.get_or_insert(row.t);
        } else {
            settled_at = None;
        }
    }
    settled_at
}

#[test]
fn criterion_4_tracking_convergence() {
    let straight = settle_time(&simulate("straight", "bio_bs+bio_smc"), 0.1);
    let circle = settle_time(&simulate("circle", "bio_bs+bio_smc"), 0.1);
    let pass = straight.is_some_and(|t| t <= 30.0) && circle.is_some_and(|t| t <= 60.0);
    report(
        4,
        "tracking convergence",
        pass,
        &format!("settled below 0.1 m at straight {straight:?} s (<= 30), circle {circle:?} s (<= 60)"),
    );
}

/// Counts steps after `window` seconds at which `v` rises by more than `tol`.
fn rises(trace: &SimTrace, v: &[f64], window: f64, tol: f64) -> usize {
    (1..v.len())
        .filter(|&k| trace.rows[k].t > window && v[k] - v[k - 1] > tol)
        .count()
}

#[test]
fn criterion_5_lyapunov_monotonicity() {
    let mut pass = true;
    let mut detail = Vec::new();
    for preset in ["straight", "circle"] {
        let trace = simulate(preset, "bio_bs+bio_smc");
        let kin = &trace.config.kinematic;
        let dynamic = &trace.config.dynamic;
        let weights = [kin.k_a, kin.k_a, kin.k_b];
        let v_p: Vec<f64> = trace
            .rows
            .iter()
            .map(|row| {
                let e = [
                    row.reference.pose.x - row.truth.pose.x,
                    row.reference.pose.y - row.truth.pose.y,
                    wrap(row.reference.pose.psi - row.truth.pose.psi),
                ];
                (0..3)
                    .map(|i| 0.5 * e[i] * e[i] + weights[i] * row.kin_activity[i].powi(2) / (2.0 * kin.shunting[i].b))
                    .sum()
            })
            .collect();
        let v_z: Vec<f64> = trace
            .rows
            .iter()
            .map(|row| {
                (0..3)
                    .map(|i| 0.5 * row.sliding[i].powi(2) + row.smc_activity[i].powi(2) / (2.0 * dynamic.shunting[i].b))
                    .sum()
            })
            .collect();
        let (np, nz) = (rises(&trace, &v_p, 2.0, 1e-6), rises(&trace, &v_z, 2.0, 1e-6));
        pass &= np == 0 && nz == 0;
        detail.push(format!("{preset}: V_p rises {np}, V_z rises {nz}"));
    }
    report(5, "Lyapunov monotonicity", pass, &detail.join("; "));
}

/// Straightforward explicit Euler of the decoupled plant.
fn euler_decay(p: &VehicleParams, mut s: [f64; 6], dt: f64, steps: usize) -> [f64; 6] {
    let m = [p.m_u, p.m_v, p.m_r];
    let d = [p.d_u, p.d_v, p.d_r];
    let q = [p.q_u, p.q_v, p.q_r];
    for _ in 0..steps {
        let [_, _, psi, u, v, r] = s;
        let rates = [
            u * psi.cos() - v * psi.sin(),
            u * psi.sin() + v * psi.cos(),
            r,
            -(d[0] * u + q[0] * u * u.abs()) / m[0],
            -(d[1] * v + q[1] * v * v.abs()) / m[1],
            -(d[2] * r + q[2] * r * r.abs()) / m[2],
        ];
        for i in 0..6 {
            s[i] += dt * rates[i];
        }
    }
    s
}

#[test]
fn criterion_6_plant_oracle_equivalence() {
    let p = VehicleParams::default();
    let mut state = VehicleState::new(Pose::new(0.0, 0.0, 0.0), BodyVelocity::new(1.0, 1.0, 0.5));
    let mut oracle = [0.0, 0.0, 0.0, 1.0, 1.0, 0.5];
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        state = rk4_step(&p, state, Torque::ZERO, 0.01);
        oracle = euler_decay(&p, oracle, 1e-5, 1000);
        let got = [state.pose.x, state.pose.y, state.pose.psi, state.vel.u, state.vel.v, state.vel.r];
        for i in 0..6 {
            let diff = if i == 2 { wrap(got[i] - oracle[i]) } else { got[i] - oracle[i] };
            worst = worst.max(diff.abs());
        }
    }
    report(6, "plant oracle equivalence", worst <= 1e-4, &format!("max |RK4 - Euler| over 10 s = {worst:.3e} (<= 1e-4)"));
}

#[test]
fn criterion_7_estimator_sanity() {
    let trace = simulate("circle_noisy", "bio_bs+bio_smc");
    let n = trace.rows.len() as f64;
    let mut meas_sq = [0.0; 6];
    let mut est_sq = [0.0; 6];
    for row in &trace.rows {
        let flat = |s: &VehicleState| [s.pose.x, s.pose.y, s.pose.psi, s.vel.u, s.vel.v, s.vel.r];
        let (t, m, e) = (flat(&row.truth), flat(&row.measured), flat(&row.estimated));
        for i in 0..6 {
            let (dm, de) = if i == 2 { (wrap(m[i] - t[i]), wrap(e[i] - t[i])) } else { (m[i] - t[i], e[i] - t[i]) };
            meas_sq[i] += dm * dm;
            est_sq[i] += de * de;
        }
    }
    let meas = meas_sq.map(|x| (x / n).sqrt());
    let est = est_sq.map(|x| (x / n).sqrt());
    let rmse_ok = (0..6).all(|i| est[i] < meas[i]);

    // d/dw of -(d w + q w |w|) / m by central differences, away from w = 0
    let p = VehicleParams::default();
    let m = [p.m_u, p.m_v, p.m_r];
    let d = [p.d_u, p.d_v, p.d_r];
    let q = [p.q_u, p.q_v, p.q_r];
    let accel = |i: usize, w: f64| -(d[i] * w + q[i] * w * w.abs()) / m[i];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..100 {
        let mut w = [0.0; 3];
        for x in &mut w {
            let mag = rng.random_range(0.01..3.0);
            *x = if rng.random_bool(0.5) { mag } else { -mag };
        }
        let jac = p.acceleration_jacobian(BodyVelocity::from_array(w));
        for i in 0..3 {
            let h = 1e-6;
            let fd = (accel(i, w[i] + h) - accel(i, w[i] - h)) / (2.0 * h);
            worst_rel = worst_rel.max((jac[i] - fd).abs() / fd.abs());
        }
    }
    let pass = rmse_ok && worst_rel <= 1e-6;
    let fmt = |v: [f64; 6]| v.map(|x| format!("{x:.2e}")).join(", ");
    report(
        7,
        "estimator sanity",
        pass,
        &format!("estimate RMSE [{}] vs measurement RMSE [{}]; Jacobian max rel err {worst_rel:.1e}", fmt(est), fmt(meas)),
    );
}

#[test]
fn criterion_8_noise_smoothness() {
    let bio = simulate("circle_noisy", "bio_bs+bio_smc");
    let sat = simulate("circle_noisy", "conv_bs+sat_smc");
    assert_eq!(bio.config.scenario.noise, Some(NoiseConfig::default()));
    let (bc, sc) = (command_tv(&bio), command_tv(&sat));
    let (bt, st) = (torque_tv(&bio), torque_tv(&sat));
    let pass = (0..3).all(|i| bc[i] < sc[i] && bt[i] < st[i]);
    report(
        8,
        "noise smoothness",
        pass,
        &format!(
            "command TV bio [{:.4}, {:.4}, {:.4}] vs sat [{:.4}, {:.4}, {:.4}]; torque TV bio [{:.0}, {:.0}, {:.1}] vs sat [{:.0}, {:.0}, {:.1}]",
            bc[0], bc[1], bc[2], sc[0], sc[1], sc[2], bt[0], bt[1], bt[2], st[0], st[1], st[2]
        ),
    );
}

#[test]
fn criterion_9_determinism() {
    let mut identical = true;
    let mut bytes = 0;
    for (preset, variant) in [("circle_noisy", "bio_bs+bio_smc"), ("circle_noisy", "conv_bs+sign_smc"), ("straight", "bio_bs+sat_smc")] {
        let a = simulate(preset, variant).to_csv_string();
        let b = simulate(preset, variant).to_csv_string();
        identical &= a.as_bytes() == b.as_bytes();
        bytes += a.len();
    }
    let variant: ControllerVariant = "bio_bs+bio_smc".parse().unwrap();
    let mut cfg = SimConfig::preset("circle_noisy", variant).unwrap();
    cfg.scenario.noise.as_mut().unwrap().seed = 99;
    let other = run(&cfg).unwrap().to_csv_string();
    let reseeded_differs = other != simulate("circle_noisy", "bio_bs+bio_smc").to_csv_string();
    report(
        9,
        "determinism",
        identical && reseeded_differs,
        &format!("3 scenarios rerun byte-identical ({bytes} bytes); different seed changes output: {reseeded_differs}"),
    );
}
