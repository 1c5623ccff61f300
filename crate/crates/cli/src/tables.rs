use pnss_core::SampledFunction;

use crate::output::Table;
use crate::pipeline::{ReceiveRun, Scenario, SendRun};
use pnss_core::TransferReport;

fn col<T, F: Fn(&T) -> f64>(items: &[T], f: F) -> Vec<f64> {
    items.iter().map(f).collect()
}

fn samples(f: &SampledFunction<f64>) -> Vec<f64> {
    f.samples().to_vec()
}

pub fn sender_table(s: &Scenario, send: &SendRun) -> Table {
    let tr = &send.trajectory;
    let (pops, _) = send.exported_coherences();
    let sigma = &tr.populations.sigma;
    let coh = &pops.coherence;
    let mut t = Table::new();
    t.push("t_s", s.grid.values())
        .push("kt", s.kt(0.0))
        .push("theta", samples(&tr.theta))
        .push("sigma_m1", col(sigma, |v| v[0]))
        .push("sigma_0", col(sigma, |v| v[1]))
        .push("sigma_p1", col(sigma, |v| v[2]));
    for (j, name) in ["m1_0", "0_p1", "m1_p1"].iter().enumerate() {
        t.push(format!("re_sigma_{name}"), col(coh, |v| v[j].re));
        t.push(format!("im_sigma_{name}"), col(coh, |v| v[j].im));
    }
    t.push("beta2_m1_0", col(&tr.beta, |b| b.m1_0.norm_sqr()))
        .push("beta2_0_0", col(&tr.beta, |b| b.z_0.norm_sqr()))
        .push("beta2_0_1", col(&tr.beta, |b| b.z_1.norm_sqr()))
        .push("beta2_p1_0", col(&tr.beta, |b| b.p1_0.norm_sqr()))
        .push("beta2_p1_1", col(&tr.beta, |b| b.p1_1.norm_sqr()))
        .push("beta2_p1_2", col(&tr.beta, |b| b.p1_2.norm_sqr()));
    t
}

pub fn photonics_table(s: &Scenario, send: &SendRun) -> Table {
    let ph = &send.photons;
    let mut t = Table::new();
    t.push("kt", s.kt(0.0))
        .push("P0", ph.p0.clone())
        .push("P1", ph.p1.clone())
        .push("P2", ph.p2.clone())
        .push("flux_total", samples(&ph.fluxes.total))
        .push("flux_I", samples(&ph.fluxes.first))
        .push("flux_II", samples(&ph.fluxes.second))
        .push("n_out", samples(&ph.n_out))
        .push("g2", ph.g2.values.clone());
    t
}

pub fn receiver_table(s: &Scenario, recv: &ReceiveRun) -> Table {
    let tr = &recv.trajectory;
    let g = &tr.gamma;
    let pops = tr.populations();
    let mut t = Table::new();
    t.push("kt", s.kt(s.config.pulse2.delay_us * 1e-6))
        .push("eta", samples(&tr.eta))
        .push("zeta", samples(&tr.zeta))
        .push("gamma2_m1_0", col(g, |x| x.m1_0.norm_sqr()))
        .push("gamma2_0_0", col(g, |x| x.z_0.norm_sqr()))
        .push("gamma2_0_1", col(g, |x| x.z_1.norm_sqr()))
        .push("gamma2_p1_0", col(g, |x| x.p1_0.norm_sqr()))
        .push("gamma2_p1_1", col(g, |x| x.p1_1.norm_sqr()))
        .push("gamma2_p1_2", col(g, |x| x.p1_2.norm_sqr()))
        .push("rho_m1", col(&pops, |p| p[0]))
        .push("rho_0", col(&pops, |p| p[1]))
        .push("rho_p1", col(&pops, |p| p[2]))
        .push("residual", samples(&recv.residual));
    t
}

/// Columns of one transfer summary row, shared by `summary.csv` and sweeps.
pub const SUMMARY_COLUMNS: [&str; 17] = [
    "L0_km",
    "eta1",
    "eta2",
    "weighted_success",
    "phase_rad",
    "fidelity",
    "end_to_end_success",
    "n_out_final",
    "P1_final",
    "P2_final",
    "T2_us",
    "t0_us",
    "omega2_mhz",
    "residual_eta",
    "residual_zeta",
    "leakage",
    "converged",
];

/// One summary row; receiver-dependent entries are NaN when the solve failed.
pub fn summary_row(
    s: &Scenario,
    send: &SendRun,
    recv: Option<&ReceiveRun>,
    report: Option<&TransferReport<f64>>,
    link: &pnss_core::LinkBudget<f64>,
) -> Vec<f64> {
    let ph = &send.photons;
    let last = ph.grid.len() - 1;
    let nan = f64::NAN;
    let (fid, e2e) = report.map_or((nan, nan), |r| (r.fidelity, r.end_to_end_success));
    let solve = recv.map(|r| &r.solve);
    vec![
        s.config.channel.l0_km,
        link.eta1,
        link.eta2,
        link.weighted_success,
        link.phase_drift_rad,
        fid,
        e2e,
        *ph.n_out.last(),
        ph.p1[last],
        ph.p2[last],
        solve.map_or(nan, |v| v.t2_us),
        solve.map_or(nan, |v| v.t0_us),
        solve.map_or(nan, |v| v.omega2_mhz),
        solve.map_or(nan, |v| v.residual_eta),
        solve.map_or(nan, |v| v.residual_zeta),
        recv.map_or(nan, |r| r.final_state.leakage),
        if recv.is_some() { 1.0 } else { 0.0 },
    ]
}

pub fn summary_table(row: Vec<f64>) -> Table {
    let mut t = Table::new();
    for (name, v) in SUMMARY_COLUMNS.iter().zip(row) {
        t.push(*name, vec![v]);
    }
    t
}
