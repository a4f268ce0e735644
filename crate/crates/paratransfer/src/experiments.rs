//! Experiment drivers. Each returns a complete [`Table`]; nothing is written
//! until the whole experiment has succeeded.

use paratransfer_core::fidelity::{hypercube_bound, hypercube_bound_with, hypercube_bound_worst_case, XiConvention};
use paratransfer_core::fockoracle::{parallel_fidelities, qc_senders, NetworkKind};
use paratransfer_core::modevo::evolve_modes;
use paratransfer_core::netgraph::{SubcubeSplit, MAX_HYPERCUBE_DIM};
use paratransfer_core::routing::{
    round_rate, schedule_for, RateReport, RoundProgram, Schedule, Scheme,
};
use paratransfer_core::transfer_time;
use rayon::prelude::*;

use crate::config::{Experiment, RateParams};
use crate::table::{Cell, Table};
use crate::Failure;

pub const EVOLVE_COLUMNS: &[&str] = &["row", "col", "re", "im"];
pub const FIDELITY_SWEEP_COLUMNS: &[&str] = &[
    "d",
    "m",
    "network",
    "eta",
    "sender",
    "receiver",
    "fidelity",
    "phase",
    "bound",
    "bound_printed",
    "bound_worst_case",
];
pub const FIGURE2_COLUMNS: &[&str] = &["d", "m", "eta", "qubit_fidelity", "qubit_fidelity_min", "oscillator_bound"];
pub const RATE_COLUMNS: &[&str] = &["scheme", "N", "d", "m", "round", "T_D", "sumF", "R", "eta", "attenuation"];
pub const SCHEDULE_COLUMNS: &[&str] = &[
    "scheme",
    "N",
    "d",
    "round",
    "m",
    "program",
    "sender",
    "receiver",
    "channel",
    "phase",
];

pub fn run(experiment: &Experiment) -> Result<Table, Failure> {
    match experiment {
        Experiment::Evolve { network, time } => {
            let t = time * transfer_time(network.coupling);
            let k = evolve_modes(&network.omega, t)?;
            let mut table = Table::new("evolve", 1, EVOLVE_COLUMNS);
            let n = k.size();
            for r in 0..n {
                for c in 0..n {
                    let z = k.get(r, c);
                    table.push(vec![r.into(), c.into(), z.re.into(), z.im.into()]);
                }
            }
            Ok(table)
        }
        Experiment::FidelitySweep {
            dimension,
            channel_bits,
            kind,
            etas,
        } => fidelity_sweep(*dimension, *channel_bits, *kind, etas),
        Experiment::Figure2 {
            dimensions,
            channel_bits,
            etas,
        } => figure2(dimensions, *channel_bits, etas),
        Experiment::Figure3 { nodes_max, rate } => figure3(*nodes_max, rate),
        Experiment::Schedule { scheme, nodes, rate } => schedule_table(*scheme, *nodes, rate),
        Experiment::Rate { scheme, nodes, rate } => {
            let schedule = schedule_for(*scheme, *nodes)?;
            let report = rate_report(&schedule, rate)?;
            let mut table = Table::new("rate", 1, RATE_COLUMNS);
            push_rounds(&mut table, &report);
            push_total(&mut table, &report);
            Ok(table)
        }
    }
}

fn kind_name(kind: NetworkKind) -> &'static str {
    match kind {
        NetworkKind::Oscillator => "oscillator",
        NetworkKind::Qubit => "qubit",
    }
}

/// QC round on a split with the top `m` bits as channel bits.
fn qc_point(d: u32, m: u32, eta: f64, kind: NetworkKind) -> Result<Vec<(usize, usize, f64, f64)>, Failure> {
    let split = SubcubeSplit::with_eta(d, &(d - m..d).collect::<Vec<_>>(), eta, 1.0)?;
    let senders = qc_senders(&split);
    let receivers: Vec<usize> = senders.iter().map(|&s| split.antipode(s)).collect();
    let f = parallel_fidelities(&senders, &receivers, &split, split.transfer_time(), kind)?;
    Ok(senders
        .iter()
        .zip(&receivers)
        .zip(f)
        .map(|((&s, &r), p)| (s, r, p.fidelity, p.correction_phase))
        .collect())
}

fn fidelity_sweep(d: u32, m: u32, kind: NetworkKind, etas: &[f64]) -> Result<Table, Failure> {
    let points: Vec<_> = etas
        .par_iter()
        .map(|&eta| qc_point(d, m, eta, kind))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new("fidelity-sweep", 1, FIDELITY_SWEEP_COLUMNS);
    for (&eta, pairs) in etas.iter().zip(points) {
        for (s, r, f, phase) in pairs {
            table.push(vec![
                d.into(),
                m.into(),
                kind_name(kind).into(),
                eta.into(),
                s.into(),
                r.into(),
                f.into(),
                phase.into(),
                hypercube_bound_with(m, eta, XiConvention::TransferTime).into(),
                hypercube_bound(m, eta).into(),
                hypercube_bound_worst_case(m, eta).into(),
            ]);
        }
    }
    Ok(table)
}

fn figure2(dimensions: &[u32], m: u32, etas: &[f64]) -> Result<Table, Failure> {
    let grid: Vec<(u32, f64)> = dimensions
        .iter()
        .flat_map(|&d| etas.iter().map(move |&e| (d, e)))
        .collect();
    let points: Vec<_> = grid
        .par_iter()
        .map(|&(d, eta)| qc_point(d, m, eta, NetworkKind::Qubit))
        .collect::<Result<_, _>>()?;
    let mut table = Table::new("figure2", 1, FIGURE2_COLUMNS);
    for (&(d, eta), pairs) in grid.iter().zip(points) {
        let mean = pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64;
        let min = pairs.iter().map(|p| p.2).fold(1.0, f64::min);
        table.push(vec![
            d.into(),
            m.into(),
            eta.into(),
            mean.into(),
            min.into(),
            hypercube_bound_with(m, eta, XiConvention::TransferTime).into(),
        ]);
    }
    Ok(table)
}

/// Rate report with rounds evaluated on the worker pool and summed in round
/// order, so the result does not depend on the number of workers.
pub fn rate_report(schedule: &Schedule, p: &RateParams) -> Result<RateReport, Failure> {
    let rounds = (0..schedule.round_count())
        .into_par_iter()
        .map(|i| round_rate(schedule, i, p.coupling, &p.budget, p.model))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RateReport::from_rounds(schedule, p.coupling, &p.decoherence, p.model, rounds)?)
}

fn dimension_cell(r: &RateReport) -> Cell {
    r.dimension.into()
}

fn push_rounds(table: &mut Table, r: &RateReport) {
    for round in &r.rounds {
        table.push(vec![
            r.scheme.as_str().into(),
            r.nodes.into(),
            dimension_cell(r),
            round.channel_bits.into(),
            round.index.into(),
            r.distribution_time.into(),
            round.sum_fidelity.into(),
            (round.sum_fidelity / r.distribution_time * r.attenuation).into(),
            round.eta.into(),
            r.attenuation.into(),
        ]);
    }
}

fn push_total(table: &mut Table, r: &RateReport) {
    table.push(vec![
        r.scheme.as_str().into(),
        r.nodes.into(),
        dimension_cell(r),
        Cell::Empty,
        "all".into(),
        r.distribution_time.into(),
        r.sum_fidelity.into(),
        r.rate.into(),
        r.eta.into(),
        r.attenuation.into(),
    ]);
}

/// Sizes used by the rate sweep: powers of two for the hypercube schemes;
/// every even `N` up to 64 and then powers of two for the complete graph.
pub fn figure3_sizes(scheme: Scheme, nodes_max: usize) -> Vec<usize> {
    let powers = (1..=MAX_HYPERCUBE_DIM).map(|d| 1usize << d).filter(|&n| n <= nodes_max);
    match scheme {
        Scheme::Complete => {
            let mut v: Vec<usize> = (2..=nodes_max.min(64)).step_by(2).collect();
            v.extend(powers.filter(|&n| n > 64));
            v
        }
        _ => powers.collect(),
    }
}

fn figure3(nodes_max: usize, p: &RateParams) -> Result<Table, Failure> {
    let points: Vec<(Scheme, usize)> = [Scheme::Mp, Scheme::Qc, Scheme::Complete]
        .into_iter()
        .flat_map(|s| figure3_sizes(s, nodes_max).into_iter().map(move |n| (s, n)))
        .collect();
    let reports: Vec<RateReport> = points
        .par_iter()
        .map(|&(s, n)| {
            let schedule = schedule_for(s, n)?;
            let rounds = (0..schedule.round_count())
                .map(|i| round_rate(&schedule, i, p.coupling, &p.budget, p.model))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(RateReport::from_rounds(&schedule, p.coupling, &p.decoherence, p.model, rounds)?)
        })
        .collect::<Result<_, Failure>>()?;
    let mut table = Table::new("figure3", 1, RATE_COLUMNS);
    for r in &reports {
        push_total(&mut table, r);
    }
    Ok(table)
}

fn schedule_table(scheme: Scheme, nodes: usize, p: &RateParams) -> Result<Table, Failure> {
    let mut schedule = schedule_for(scheme, nodes)?;
    schedule.validate()?;
    if nodes <= 1024 {
        schedule.annotate_phases(p.coupling, &p.budget)?;
    }
    let mut table = Table::new("schedule", 1, SCHEDULE_COLUMNS);
    for (i, round) in schedule.rounds().iter().enumerate() {
        let program = match &round.program {
            RoundProgram::Subcube { channel_bits } => format!(
                "subcube:{}",
                channel_bits.iter().map(u32::to_string).collect::<Vec<_>>().join(";")
            ),
            RoundProgram::Pairing { matching } => format!(
                "pairing:{}",
                matching.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(";")
            ),
        };
        for t in &round.tasks {
            table.push(vec![
                schedule.scheme().as_str().into(),
                nodes.into(),
                schedule.dimension().into(),
                i.into(),
                round.program.channel_bits().into(),
                program.clone().into(),
                t.sender.into(),
                t.receiver.into(),
                t.channel.into(),
                t.phase.into(),
            ]);
        }
    }
    Ok(table)
}
