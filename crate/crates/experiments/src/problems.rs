//! Construction of the heat source and channelized permeability problems.

use chronobasis::discretization::{
    AffineDiffusion, BoundaryFlux, BoundarySegment, CoefficientField, DirichletSides, Raster, RectangleMesh, Side,
    Signal, TimeGrid, TransientProblem,
};
use chronobasis::rng::SplitMix64;

use crate::config::{Piece, Rect, Spe10Config, StoveConfig};
use crate::error::{ExperimentError, Result};

/// Unit square, homogeneous Dirichlet everywhere, `κ ≡ 1`, one bump-modulated
/// indicator source per footprint, `u₀ = 0`.
pub fn stove_problem(cfg: &StoveConfig) -> Result<TransientProblem> {
    cfg.validate()?;
    let mesh = RectangleMesh::unit_square(cfg.cells, DirichletSides::ALL)?;
    let kappa = CoefficientField::constant(&mesh, 1.0)?;
    let sources = cfg
        .sources
        .iter()
        .map(|s| {
            let fp = s.footprint;
            let signal = Signal::Bump {
                center: s.signal.center,
                height: s.signal.height,
                width: s.signal.width,
            };
            (signal, mesh.interpolate(|x, y| if fp.contains(x, y) { 1.0 } else { 0.0 }))
        })
        .collect();
    let nodes = mesh.node_count();
    Ok(TransientProblem::new(
        mesh,
        TimeGrid::new(cfg.grid.end_time, cfg.grid.steps)?,
        AffineDiffusion::constant(kappa),
        sources,
        vec![],
        vec![0.0; nodes],
    )?)
}

fn piecewise(p: &[Piece]) -> Signal {
    Signal::Piecewise(p.iter().map(|q| (q.start, q.end, q.value)).collect())
}

fn channel_field(mesh: &RectangleMesh, rects: &[Rect], value: f64) -> Result<CoefficientField> {
    Ok(CoefficientField::from_fn(mesh, |x, y| {
        if rects.iter().any(|r| r.contains(x, y)) {
            value
        } else {
            0.0
        }
    })?)
}

/// Moving average over `[i−r, i+r]`, truncated at the ends.
fn box_smooth(values: &mut [f64], stride: usize, len: usize, count: usize, outer: usize, r: usize) {
    let mut line = vec![0.0; len];
    for o in 0..count {
        let base = o * outer;
        for (i, l) in line.iter_mut().enumerate() {
            *l = values[base + i * stride];
        }
        for i in 0..len {
            let (a, b) = (i.saturating_sub(r), (i + r).min(len - 1));
            values[base + i * stride] = line[a..=b].iter().sum::<f64>() / (b - a + 1) as f64;
        }
    }
}

/// Log-normal field with anisotropic correlation: Gaussian white noise per cell,
/// box-smoothed along each axis, standardized, scaled, clamped in `log10` and
/// exponentiated.
pub fn synthetic_background(nx: usize, ny: usize, cfg: &crate::config::BackgroundConfig) -> Vec<f64> {
    let mut rng = SplitMix64::new(cfg.seed);
    let mut z: Vec<f64> = (0..nx * ny).map(|_| rng.standard_normal()).collect();
    for _ in 0..2 {
        box_smooth(&mut z, 1, nx, ny, nx, cfg.radius_x);
        box_smooth(&mut z, nx, ny, nx, 1, cfg.radius_y);
    }
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let std = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    z.iter()
        .map(|v| {
            let s = if std > 0.0 { (v - mean) / std } else { 0.0 };
            10f64.powf((cfg.log10_std * s).clamp(cfg.log10_min, cfg.log10_max))
        })
        .collect()
}

/// `κ₀` from the configured raster file, or the synthetic generator.
pub fn background_field(cfg: &Spe10Config) -> Result<Vec<f64>> {
    match &cfg.background.raster {
        Some(path) => {
            let r = Raster::read(path)?;
            if (r.nx, r.ny) != (cfg.nx, cfg.ny) {
                return Err(ExperimentError::Config(format!(
                    "raster is {}x{}, mesh is {}x{}",
                    r.nx, r.ny, cfg.nx, cfg.ny
                )));
            }
            Ok(r.values)
        }
        None => Ok(synthetic_background(cfg.nx, cfg.ny, &cfg.background)),
    }
}

/// Rectangle with homogeneous Dirichlet on the bottom edge, inflow on a top-edge
/// segment and `κ(t) = max(κ₀ + κ₁(t)·κ₁ + κ₂(t)·κ₂, κ_min)`; `u₀ = 0`.
pub fn spe10_problem(cfg: &Spe10Config) -> Result<TransientProblem> {
    cfg.validate()?;
    let mesh = RectangleMesh::new(cfg.lx, cfg.ly, cfg.nx, cfg.ny, DirichletSides::BOTTOM)?;
    let k0 = CoefficientField::from_cells(&mesh, background_field(cfg)?)?;
    let k1 = channel_field(&mesh, &cfg.channels1, cfg.channel_value)?;
    let k2 = channel_field(&mesh, &cfg.channels2, cfg.channel_value)?;
    let diffusion = AffineDiffusion {
        terms: vec![
            (Signal::Constant(1.0), k0),
            (piecewise(&cfg.kappa1_signal), k1),
            (piecewise(&cfg.kappa2_signal), k2),
        ],
        floor: cfg.kappa_min,
    };
    let inflow = BoundaryFlux {
        segment: BoundarySegment {
            side: Side::Top,
            from: cfg.inflow_x0,
            to: cfg.inflow_x1,
        },
        density: 1.0,
    };
    let nodes = mesh.node_count();
    Ok(TransientProblem::new(
        mesh,
        TimeGrid::new(cfg.grid.end_time, cfg.grid.steps)?,
        diffusion,
        vec![],
        vec![(piecewise(&cfg.inflow_signal), inflow)],
        vec![0.0; nodes],
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BackgroundConfig;

    #[test]
    fn synthetic_background_spans_orders_of_magnitude() {
        let v = synthetic_background(110, 30, &BackgroundConfig::default());
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min).log10();
        let hi = v.iter().copied().fold(0.0, f64::max).log10();
        assert!(lo >= -3.0 && hi <= 3.0);
        assert!(hi - lo > 4.0, "range {lo}..{hi}");
        assert_eq!(v, synthetic_background(110, 30, &BackgroundConfig::default()));
    }

    #[test]
    fn stove_sources_are_disjoint_indicators() {
        let mut cfg = StoveConfig::default();
        cfg.cells = 16;
        let p = stove_problem(&cfg).unwrap();
        let s = p.sources();
        assert_eq!(s.len(), 3);
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(s[i].1.iter().zip(&s[j].1).all(|(a, b)| a * b == 0.0));
            }
        }
        // 5x5 nodes inside a quarter-width footprint on a 1/16 mesh
        assert_eq!(s[0].1.iter().sum::<f64>(), 25.0);
    }

    #[test]
    fn spe10_diffusion_states() {
        let mut cfg = Spe10Config::default();
        cfg.grid.steps = 20;
        let p = spe10_problem(&cfg).unwrap();
        let keys: std::collections::BTreeSet<Vec<u64>> = p.grid().times().map(|t| p.diffusion_key(t)).collect();
        assert_eq!(keys.len(), 3);
        let chan = p.diffusion_at(9.0);
        let mesh = p.mesh();
        let c = (0..mesh.cell_count())
            .find(|&c| {
                let (x, y) = mesh.cell_centroid(c);
                (1.6..1.7).contains(&x) && y > 0.3
            })
            .unwrap();
        assert!(chan.values()[c] >= 1e3);
        assert!(p.diffusion_at(0.0).values().iter().all(|&v| v >= 1e-3));
    }
}
