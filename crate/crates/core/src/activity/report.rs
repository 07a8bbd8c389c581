//! CSV reports with a header row.

use std::io::Write;

use crate::activity::energy::{EnergyItems, EnergyReport};
use crate::activity::tiling::TilingReport;
use crate::activity::ToggleStats;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sim::{cycle_report, SimTrace};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        k => Error::Format(format!("csv: {k:?}")),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

/// One row per mode, plus per-layer rows when `per_layer` is set.
pub fn write_toggle_csv<W: Write>(w: W, stats: &[ToggleStats], per_layer: bool) -> Result<()> {
    let mut c = writer(w);
    c.write_record([
        "mode",
        "layer",
        "cycles",
        "adder_toggles",
        "adder_nodes",
        "adder_toggle_prob",
        "multiplier_toggles",
        "multiplier_nodes",
        "multiplier_toggle_prob",
    ])
    .map_err(csv_err)?;
    let p = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    for s in stats {
        let mut rows: Vec<(String, _)> = Vec::new();
        if per_layer {
            rows.extend(s.layers.iter().map(|l| (l.layer.to_string(), *l)));
        }
        rows.push(("total".into(), s.total));
        for (name, t) in rows {
            c.write_record([
                s.mode.name(),
                name,
                t.cycles.to_string(),
                t.adder_toggles.to_string(),
                t.adder_nodes.to_string(),
                p(t.adder_toggles, t.adder_nodes).to_string(),
                t.multiplier_toggles.to_string(),
                t.multiplier_nodes.to_string(),
                p(t.multiplier_toggles, t.multiplier_nodes).to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    c.flush()?;
    Ok(())
}

fn item_cells<T: Real>(i: &EnergyItems<T>) -> Vec<String> {
    let mut v: Vec<String> = i.values().iter().map(|x| format!("{:.3}", x.as_f64())).collect();
    v.push(format!("{:.3}", i.core().as_f64()));
    v.push(format!("{:.3}", i.total().as_f64()));
    v
}

/// Per-layer itemized energy in picojoules with a total row, for each
/// labeled report.
pub fn write_energy_csv<W: Write, T: Real>(w: W, reports: &[(&str, &EnergyReport<T>)]) -> Result<()> {
    let mut c = writer(w);
    let mut head: Vec<String> = ["run", "layer", "cycles", "ops", "adder_toggles", "multiplier_toggles"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    head.extend(EnergyItems::<T>::NAMES.iter().map(|n| format!("{n}_pj")));
    head.push("core_pj".into());
    head.push("total_pj".into());
    c.write_record(&head).map_err(csv_err)?;
    for (label, report) in reports {
        for l in &report.layers {
            let mut row = vec![
                label.to_string(),
                l.layer.to_string(),
                l.cycles.to_string(),
                l.ops.to_string(),
                l.adder_toggles.to_string(),
                l.multiplier_toggles.to_string(),
            ];
            row.extend(item_cells(&l.items));
            c.write_record(&row).map_err(csv_err)?;
        }
        let mut row = vec![
            label.to_string(),
            "total".into(),
            report.layers.iter().map(|l| l.cycles).sum::<u64>().to_string(),
            report.total_ops().to_string(),
            report.layers.iter().map(|l| l.adder_toggles).sum::<u64>().to_string(),
            report.layers.iter().map(|l| l.multiplier_toggles).sum::<u64>().to_string(),
        ];
        row.extend(item_cells(&report.total));
        c.write_record(&row).map_err(csv_err)?;
    }
    c.flush()?;
    Ok(())
}

pub fn write_tiling_csv<W: Write, T: Real>(w: W, reports: &[TilingReport<T>]) -> Result<()> {
    let mut c = writer(w);
    c.write_record([
        "fm_h",
        "fm_w",
        "tile_h",
        "tile_w",
        "layers",
        "strategy",
        "tiles",
        "external_bits",
        "weight_bits",
        "windows",
        "fm_transfer_uj",
        "weight_uj",
        "compute_uj",
        "total_uj",
    ])
    .map_err(csv_err)?;
    for r in reports {
        let p = &r.plan;
        let uj = |x: T| format!("{:.6}", x.as_f64() * 1e-6);
        c.write_record([
            p.fm.0.to_string(),
            p.fm.1.to_string(),
            p.tile.0.to_string(),
            p.tile.1.to_string(),
            p.layers.to_string(),
            p.strategy.name().to_string(),
            r.tiles.to_string(),
            r.external_bits.as_f64().to_string(),
            r.weight_bits.as_f64().to_string(),
            r.windows.to_string(),
            uj(r.fm_transfer_pj),
            uj(r.weight_pj),
            uj(r.compute_pj),
            uj(r.total_pj()),
        ])
        .map_err(csv_err)?;
    }
    c.flush()?;
    Ok(())
}

/// Cycle breakdown, operations and throughput per layer.
pub fn write_cycle_csv<W: Write>(w: W, trace: &SimTrace) -> Result<()> {
    let mut c = writer(w);
    c.write_record([
        "layer",
        "load",
        "exposed_load",
        "issue",
        "prime",
        "stall",
        "compute",
        "drain",
        "execute",
        "ops",
        "ops_per_cycle",
        "utilization",
        "words_read",
        "words_written",
        "active_stages",
    ])
    .map_err(csv_err)?;
    for (i, l) in trace.layers.iter().enumerate() {
        let r = cycle_report(trace, i);
        let y = l.cycles;
        c.write_record([
            l.index.to_string(),
            y.load.to_string(),
            y.exposed_load.to_string(),
            y.issue.to_string(),
            y.prime.to_string(),
            y.stall.to_string(),
            y.compute.to_string(),
            y.drain.to_string(),
            y.execute().to_string(),
            r.ops.to_string(),
            r.ops_per_cycle.to_string(),
            r.utilization.to_string(),
            l.words_read.to_string(),
            l.words_written.to_string(),
            l.active_stages.to_string(),
        ])
        .map_err(csv_err)?;
    }
    c.flush()?;
    Ok(())
}
