//! Experiment execution and persistence.
//!
//! Each scenario reduces to a table of named columns over a time (or field,
//! or gamma) axis, written as CSV, plus a JSON metadata document carrying
//! the fully resolved configuration, seeds, derived quantities, and wall
//! time. Reruns with the same config and seed produce byte-identical CSV.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{serialize_config, ExperimentSpec, InitialState, Scenario};
use crate::effective::{effective_lindbladian, EffectiveModel};
use crate::error::{Error, Result};
use crate::lindblad::{evolve_qme, JumpSet, Liouvillian};
use crate::model::chain::{build_pair_hamiltonian, dressed_basis_state, pair_dressed_basis_state, ChainSpec};
use crate::model::{extracted_coupling, matching_field, Branch};
use crate::observables::{bond_currents, bond_voltage, net_polarization, nuclear_polarizations, DressedMeter};
use crate::state::QuantumState;
use crate::traj::ensemble::{reduce_series, run_trajectories};
use crate::traj::kmc::{run_kmc, KmcOptions, SpinConfig};
use crate::traj::qjm::{EigenQjmEngine, QjmOptions, RotatingQjmEngine};
use crate::lindblad::optical_pumping_jumps;
use crate::nonhermitian::{find_exceptional_point, riemann_scan};
use crate::traj::gamma::{gamma_eff_oracle, SpVariant};

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug)]
pub struct Artifacts {
    pub observables: Table,
    pub grid: Option<Table>,
    pub derived: serde_json::Value,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub observables_csv: PathBuf,
    pub metadata_json: PathBuf,
    pub grid_csv: Option<PathBuf>,
}

/// Execute a validated experiment in memory.
pub fn execute(spec: &ExperimentSpec) -> Result<Artifacts> {
    spec.validate()?;
    match spec.scenario {
        Scenario::PairDynamics => run_pair(spec),
        Scenario::ChainQjm => run_chain_qjm(spec, None),
        Scenario::DefectProtocol => run_chain_qjm(spec, spec.protocol.as_ref()),
        Scenario::FieldScan => run_field_scan(spec),
        Scenario::EffectiveChain | Scenario::EffectiveRing | Scenario::EffectiveTree => {
            run_effective(spec)
        }
        Scenario::KmcLargeN => run_kmc_scenario(spec),
        Scenario::EpScan => run_ep_scan(spec),
        Scenario::GammaEffOracle => run_oracle(spec),
    }
}

/// Execute and persist. `threads` bounds the rayon pool (default: cores).
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<RunOutput> {
    let started = std::time::Instant::now();
    let artifacts = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| execute(spec))?
        }
        None => execute(spec)?,
    };
    std::fs::create_dir_all(out_dir)?;
    let observables_csv = out_dir.join("observables.csv");
    write_csv(&observables_csv, &artifacts.observables)?;
    let grid_csv = match &artifacts.grid {
        Some(table) => {
            let p = out_dir.join("grid.csv");
            write_csv(&p, table)?;
            Some(p)
        }
        None => None,
    };
    let metadata_json = out_dir.join("metadata.json");
    let meta = json!({
        "tool": "spinflow",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": format!("{:?}", spec.scenario),
        "master_seed": spec.master_seed,
        "n_traj": spec.n_traj,
        "threads": threads,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "columns": artifacts.observables.columns,
        "derived": artifacts.derived,
        "warnings": artifacts.warnings,
        "config_toml": serialize_config(spec),
    });
    std::fs::write(&metadata_json, serde_json::to_string_pretty(&meta).unwrap())?;
    Ok(RunOutput { out_dir: out_dir.to_path_buf(), observables_csv, metadata_json, grid_csv })
}

fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    f.flush()?;
    Ok(())
}

fn chain_derived(chain: &ChainSpec) -> serde_json::Value {
    let j = extracted_coupling(chain).ok();
    let matching = matching_field(chain, Branch::Alpha).ok();
    json!({
        "j_eff_hz": j,
        "b_field_t": chain.b_field,
        "b_matching_alpha_t": matching.as_ref().map(|m| m.b_m),
        "matching_residual_hz": matching.as_ref().map(|m| m.residual),
        "pump_rate_per_s": chain.pump_rate,
        "relax_rate_per_s": chain.relax_rate,
    })
}

// ---------------------------------------------------------------------------
// pair dynamics
// ---------------------------------------------------------------------------

fn pair_initial_levels(init: &InitialState) -> Result<(usize, usize)> {
    // returns nuclear levels (I1, I2); electron levels fixed at S = m0,
    // S' = +1/2
    match init.pattern(2)? {
        Some(bits) => Ok((usize::from(!bits[0]), usize::from(!bits[1]))),
        None => Err(Error::Config(
            "pair_dynamics needs a deterministic initial state (forward/reversed/pattern)".into(),
        )),
    }
}

fn run_pair(spec: &ExperimentSpec) -> Result<Artifacts> {
    let chain = spec.chain.as_ref().unwrap();
    let grid = spec.time_grid();
    let h = build_pair_hamiltonian(chain)?;
    let layout = crate::model::chain::pair_layout();
    let (l1, l2) = pair_initial_levels(&spec.initial_state)?;
    let psi0 = pair_dressed_basis_state(chain, (l1, 1, 0, l2))?;
    let meter = DressedMeter::new_pair(chain)?;

    // master equation reference
    let mut jumps = JumpSet::empty();
    for (k, op) in optical_pumping_jumps(&layout, "S", chain.pump_rate)?.into_iter().enumerate() {
        jumps.push(op, format!("pump_{k}"));
    }
    let liou = Liouvillian::new(Some(h.clone()), jumps.clone())?;
    let rho0 = QuantumState::pure(layout.clone(), psi0.clone())?.to_density();
    let qme_states = evolve_qme(&liou, &rho0, &grid)?;
    let qme_pol: Vec<Vec<f64>> = qme_states
        .iter()
        .map(|s| meter.polarizations_density(s))
        .collect::<Result<_>>()?;

    let mut columns = vec!["time_s".to_string(), "p_1_qme".into(), "p_2_qme".into()];
    let mut rows: Vec<Vec<f64>> =
        grid.iter().enumerate().map(|(k, &t)| vec![t, qme_pol[k][0], qme_pol[k][1]]).collect();

    if spec.n_traj >= 1 {
        let engine = EigenQjmEngine::new(&h, jumps)?;
        let opts = QjmOptions::default();
        let runs = run_trajectories(spec.n_traj, spec.master_seed, |_, mut rng| {
            let r = engine.run(&psi0, &grid, &mut rng, &opts)?;
            let mut p1 = Vec::with_capacity(grid.len());
            let mut p2 = Vec::with_capacity(grid.len());
            for s in &r.states {
                let p = meter.polarizations(s)?;
                p1.push(p[0]);
                p2.push(p[1]);
            }
            Ok((p1, p2))
        })?;
        let s1 = reduce_series(&runs.iter().map(|r| r.0.clone()).collect::<Vec<_>>());
        let s2 = reduce_series(&runs.iter().map(|r| r.1.clone()).collect::<Vec<_>>());
        columns.extend(["p_1".into(), "p_2".into(), "p_1_err".into(), "p_2_err".into()]);
        for (k, row) in rows.iter_mut().enumerate() {
            row.extend([s1.mean[k], s2.mean[k], s1.stderr[k], s2.stderr[k]]);
        }
    }
    Ok(Artifacts {
        observables: Table { columns, rows },
        grid: None,
        derived: chain_derived(chain),
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// full-model chain trajectories
// ---------------------------------------------------------------------------

/// Dressed product initial state: nuclear pattern (or random bits), spin S
/// pumped into m = 0, spin S' projections random per trajectory.
pub fn chain_initial_state(
    chain: &ChainSpec,
    pattern: Option<&[bool]>,
    rng: &mut ChaCha12Rng,
) -> Result<Array1<C64>> {
    let n = chain.n_sites();
    let mut levels = Vec::with_capacity(n);
    for j in 0..n {
        let nuclear_up = match pattern {
            Some(bits) => bits[j],
            None => rng.gen::<bool>(),
        };
        let sp_level = usize::from(rng.gen::<bool>());
        levels.push((usize::from(!nuclear_up), 1usize, sp_level));
    }
    dressed_basis_state(chain, &levels)
}

fn run_chain_qjm(
    spec: &ExperimentSpec,
    protocol: Option<&crate::traj::field::FieldProtocol>,
) -> Result<Artifacts> {
    let chain = spec.chain.as_ref().unwrap();
    let n = chain.n_sites();
    let grid = spec.time_grid();
    let opts = QjmOptions::default();
    let engine = RotatingQjmEngine::new(chain, protocol.cloned(), &opts)?;
    let meter = DressedMeter::new(chain)?;
    let pattern = spec.initial_state.pattern(n)?;

    let runs = run_trajectories(spec.n_traj.max(1), spec.master_seed, |_, mut rng| {
        let psi0 = chain_initial_state(chain, pattern.as_deref(), &mut rng)?;
        let r = engine.run(&psi0, &grid, &mut rng, &opts)?;
        let mut per_site: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); n];
        for s in &r.states {
            let p = meter.polarizations(s)?;
            for (j, v) in p.iter().enumerate() {
                per_site[j].push(*v);
            }
        }
        Ok(per_site)
    })?;

    let mut columns = vec!["time_s".to_string()];
    if protocol.is_some() {
        columns.push("b_t".into());
    }
    let mut rows: Vec<Vec<f64>> = grid
        .iter()
        .map(|&t| {
            let mut row = vec![t];
            if let Some(p) = protocol {
                row.push(p.field_at(t));
            }
            row
        })
        .collect();
    let mut site_stats = Vec::with_capacity(n);
    for j in 0..n {
        let series: Vec<Vec<f64>> = runs.iter().map(|r| r[j].clone()).collect();
        site_stats.push(reduce_series(&series));
        columns.push(format!("p_{}", j + 1));
    }
    columns.push("p_c".into());
    for j in 0..n {
        columns.push(format!("p_{}_err", j + 1));
    }
    for (k, row) in rows.iter_mut().enumerate() {
        let mut pc = 0.0;
        for stats in &site_stats {
            row.push(stats.mean[k]);
            pc += stats.mean[k];
        }
        row.push(pc / n as f64);
        for stats in &site_stats {
            row.push(stats.stderr[k]);
        }
    }
    Ok(Artifacts {
        observables: Table { columns, rows },
        grid: None,
        derived: chain_derived(chain),
        warnings: Vec::new(),
    })
}

fn run_field_scan(spec: &ExperimentSpec) -> Result<Artifacts> {
    let chain = spec.chain.as_ref().unwrap();
    let n = chain.n_sites();
    let half = spec.scan_halfwidth.unwrap();
    let n_b = spec.n_outputs;
    let grid = vec![0.0, spec.t_max];
    let pattern = spec.initial_state.pattern(n)?;
    let opts = QjmOptions::default();

    let mut columns = vec!["b_t".to_string()];
    for j in 0..n {
        columns.push(format!("p_{}", j + 1));
    }
    columns.push("p_c".into());
    for j in 0..n {
        columns.push(format!("p_{}_err", j + 1));
    }
    let mut rows = Vec::with_capacity(n_b + 1);
    for kb in 0..=n_b {
        let b = chain.b_field - half + 2.0 * half * kb as f64 / n_b as f64;
        let scan_chain = chain.with_field(b);
        let engine = RotatingQjmEngine::new(&scan_chain, None, &opts)?;
        let meter = DressedMeter::new(&scan_chain)?;
        let runs = run_trajectories(spec.n_traj.max(1), spec.master_seed, |_, mut rng| {
            let psi0 = chain_initial_state(&scan_chain, pattern.as_deref(), &mut rng)?;
            let r = engine.run(&psi0, &grid, &mut rng, &opts)?;
            meter.polarizations(r.states.last().unwrap())
        })?;
        let per_site: Vec<Vec<f64>> =
            (0..n).map(|j| runs.iter().map(|r| vec![r[j]]).collect::<Vec<_>>()).map(|s| {
                let st = reduce_series(&s);
                vec![st.mean[0], st.stderr[0]]
            }).collect();
        let mut row = vec![b];
        let mut pc = 0.0;
        for s in &per_site {
            row.push(s[0]);
            pc += s[0];
        }
        row.push(pc / n as f64);
        for s in &per_site {
            row.push(s[1]);
        }
        rows.push(row);
    }
    Ok(Artifacts {
        observables: Table { columns, rows },
        grid: None,
        derived: chain_derived(chain),
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// effective models
// ---------------------------------------------------------------------------

fn effective_initial(model: &EffectiveModel, init: &InitialState) -> Result<QuantumState> {
    let layout = model.layout();
    match init.pattern(model.n_sites)? {
        Some(bits) => {
            let levels: Vec<usize> = bits.iter().map(|&b| usize::from(!b)).collect();
            Ok(QuantumState::basis_state(layout, &levels)?.to_density())
        }
        None => Ok(QuantumState::maximally_mixed(layout)),
    }
}

fn run_effective(spec: &ExperimentSpec) -> Result<Artifacts> {
    let model = spec.effective.as_ref().unwrap();
    let n = model.n_sites;
    let grid = spec.time_grid();
    let liou = effective_lindbladian(model)?;
    let rho0 = effective_initial(model, &spec.initial_state)?;
    let states = evolve_qme(&liou, &rho0, &grid)?;

    let mut columns = vec!["time_s".to_string()];
    for j in 0..n {
        columns.push(format!("p_{}", j + 1));
    }
    for b in &model.directed_bonds {
        columns.push(format!("k_{}_{}", b.from + 1, b.to + 1));
    }
    let wrap_voltage = n >= 2;
    if wrap_voltage {
        columns.push(format!("v_{}_1", n));
    }
    columns.push("p_c".into());

    let mut rows = Vec::with_capacity(grid.len());
    for (k, state) in states.iter().enumerate() {
        let mut row = vec![grid[k]];
        row.extend(nuclear_polarizations(state)?);
        row.extend(bond_currents(state, model)?);
        if wrap_voltage {
            row.push(bond_voltage(state, n, 1)?);
        }
        row.push(net_polarization(state)?);
        rows.push(row);
    }
    let derived = json!({
        "uniform_rate_hz": model.uniform_rate(),
        "n_sites": n,
    });
    Ok(Artifacts { observables: Table { columns, rows }, grid: None, derived, warnings: vec![] })
}

fn run_kmc_scenario(spec: &ExperimentSpec) -> Result<Artifacts> {
    let model = spec.effective.as_ref().unwrap();
    let n = model.n_sites;
    let grid = spec.time_grid();
    let sample_times: Vec<f64> = grid.clone();
    let pattern = spec.initial_state.pattern(n)?;
    let opts = KmcOptions::default();

    let runs = run_trajectories(spec.n_traj.max(1), spec.master_seed, |_, mut rng| {
        let c0 = match &pattern {
            Some(bits) => SpinConfig::from_bits(bits),
            None => SpinConfig::random(n, &mut rng),
        };
        let r = run_kmc(model, &c0, spec.t_max, &sample_times, &mut rng, &opts)?;
        let mut per_site: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); n];
        for cfg in &r.samples {
            for (j, v) in cfg.polarizations().iter().enumerate() {
                per_site[j].push(*v);
            }
        }
        Ok((per_site, r.final_config))
    })?;

    let mut columns = vec!["time_s".to_string()];
    let mut rows: Vec<Vec<f64>> = grid.iter().map(|&t| vec![t]).collect();
    let mut stats = Vec::with_capacity(n);
    for j in 0..n {
        let series: Vec<Vec<f64>> = runs.iter().map(|r| r.0[j].clone()).collect();
        stats.push(reduce_series(&series));
        columns.push(format!("p_{}", j + 1));
    }
    for j in 0..n {
        columns.push(format!("p_{}_err", j + 1));
    }
    for (k, row) in rows.iter_mut().enumerate() {
        for s in &stats {
            row.push(s.mean[k]);
        }
        for s in &stats {
            row.push(s.stderr[k]);
        }
    }
    let finals: Vec<SpinConfig> = runs.into_iter().map(|r| r.1).collect();
    let hist = crate::observables::domain_wall_histogram(n, &finals);
    let derived = json!({
        "uniform_rate_hz": model.uniform_rate(),
        "domain_wall_weights": hist.weights,
        "non_domain_wall_mass": hist.non_wall_mass,
    });
    Ok(Artifacts { observables: Table { columns, rows }, grid: None, derived, warnings: vec![] })
}

// ---------------------------------------------------------------------------
// exceptional point and rate oracle
// ---------------------------------------------------------------------------

fn run_ep_scan(spec: &ExperimentSpec) -> Result<Artifacts> {
    let ep = spec.ep.as_ref().unwrap();
    let surface = riemann_scan(
        ep.j_eff,
        (-ep.delta_max, ep.delta_max),
        (0.0, ep.gamma_max),
        ep.n_delta,
        ep.n_gamma,
    );
    let located = find_exceptional_point(ep.j_eff)?;

    let grid_cols = vec![
        "delta_hz".to_string(),
        "gamma_hz".into(),
        "re_l1".into(),
        "im_l1".into(),
        "re_l2".into(),
        "im_l2".into(),
    ];
    let mut grid_rows = Vec::with_capacity(ep.n_delta * ep.n_gamma);
    for (i, &d) in surface.delta_grid.iter().enumerate() {
        for (j, &g) in surface.gamma_grid.iter().enumerate() {
            let [l1, l2] = surface.eigenvalues[i][j];
            grid_rows.push(vec![d, g, l1.re, l1.im, l2.re, l2.im]);
        }
    }

    // delta ~ 0 slice as the quick-look observable table
    let mid = surface.delta_grid.len() / 2;
    let mut rows = Vec::new();
    for (j, &g) in surface.gamma_grid.iter().enumerate() {
        let [l1, l2] = surface.eigenvalues[mid][j];
        rows.push(vec![g, l1.re, l1.im, l2.re, l2.im]);
    }
    let columns = vec![
        "gamma_hz".to_string(),
        "re_l1".into(),
        "im_l1".into(),
        "re_l2".into(),
        "im_l2".into(),
    ];
    let derived = json!({
        "j_eff_hz": ep.j_eff,
        "ep_delta_hz": located.delta_eff,
        "ep_gamma_hz": located.gamma_op,
        "ep_eigenvalue_gap_hz": located.eigenvalue_gap,
        "ep_eigenvector_overlap": located.eigenvector_overlap,
        "max_characteristic_residual": surface.max_characteristic_residual(),
    });
    Ok(Artifacts {
        observables: Table { columns, rows },
        grid: Some(Table { columns: grid_cols, rows: grid_rows }),
        derived,
        warnings: vec![],
    })
}

fn run_oracle(spec: &ExperimentSpec) -> Result<Artifacts> {
    let o = spec.oracle.as_ref().unwrap();
    let three = gamma_eff_oracle(
        o.pump_rate,
        o.relax_rate,
        o.n_intervals,
        o.n_samples,
        spec.master_seed,
        SpVariant::ThreeSpins,
    );
    let two = gamma_eff_oracle(
        o.pump_rate,
        o.relax_rate,
        o.n_intervals,
        o.n_samples,
        spec.master_seed.wrapping_add(1),
        SpVariant::TwoSpins,
    );
    let columns =
        vec!["time_s".to_string(), "survival_three".into(), "survival_two".into()];
    let rows: Vec<Vec<f64>> = three
        .survival
        .iter()
        .zip(two.survival.iter())
        .map(|(&(t, s3), &(_, s2))| vec![t, s3, s2])
        .collect();
    let mut warnings = Vec::new();
    if three.regime_warning {
        warnings.push("pump_rate <= relax_rate: outside the validity regime".into());
    }
    let derived = json!({
        "rate_three_spin_hz": three.rate,
        "rate_two_spin_hz": two.rate,
        "expected_three_spin_hz": three.expected,
        "expected_two_spin_hz": two.expected,
        "limit_three_spin_hz": crate::traj::gamma::gamma_eff_limit(o.relax_rate, SpVariant::ThreeSpins),
        "limit_two_spin_hz": crate::traj::gamma::gamma_eff_limit(o.relax_rate, SpVariant::TwoSpins),
    });
    Ok(Artifacts { observables: Table { columns, rows }, grid: None, derived, warnings })
}

/// Per-observable ensemble statistics keyed by column name; used by tests.
pub fn table_column<'a>(table: &'a Table, name: &str) -> Option<Vec<f64>> {
    let idx = table.columns.iter().position(|c| c == name)?;
    Some(table.rows.iter().map(|r| r[idx]).collect())
}

/// Convenience: map of final-row values by column.
pub fn final_row(table: &Table) -> BTreeMap<String, f64> {
    let last = table.rows.last().cloned().unwrap_or_default();
    table.columns.iter().cloned().zip(last).collect()
}
