//! Finitely supported probability measures on Sⁿ.
//!
//! All measures in the crate (pullback iterates, volume discretizations,
//! equilibrium candidates) are finite weighted atom lists. Atoms closer than
//! the merge tolerance are combined with weights added, zero weights are
//! compacted away, and the total mass is a probability mass within 1e-12.
//! Merging sorts atoms lexicographically first, so the result does not
//! depend on input order.

use std::io::{BufRead, Write};

use crate::error::MeasureError;
use crate::sphere::SpherePoint;
use crate::tolerances::{ATOM_MERGE_TOL, MASS_TOL};

#[derive(Debug, Clone)]
pub struct WeightedAtom {
    pub point: SpherePoint,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    atoms: Vec<WeightedAtom>,
}

impl DiscreteMeasure {
    /// Validate and canonicalize: merge coincident atoms, drop zero weights,
    /// and require unit total mass within tolerance.
    pub fn new(atoms: Vec<WeightedAtom>) -> Result<Self, MeasureError> {
        let atoms = Self::canonicalize(atoms)?;
        let mass = pairwise_sum_by(&atoms, |a| a.weight);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::MassNotNormalized {
                mass,
                tol: MASS_TOL,
            });
        }
        Ok(DiscreteMeasure { atoms })
    }

    /// Canonicalize and rescale the total mass to exactly 1. For inputs that
    /// are already probability vectors up to rounding this only removes the
    /// accumulated floating-point drift.
    pub fn normalized(atoms: Vec<WeightedAtom>) -> Result<Self, MeasureError> {
        let mut atoms = Self::canonicalize(atoms)?;
        let mass = pairwise_sum_by(&atoms, |a| a.weight);
        if !(mass.is_finite() && mass > 0.0) {
            return Err(MeasureError::MassNotNormalized {
                mass,
                tol: MASS_TOL,
            });
        }
        for a in atoms.iter_mut() {
            a.weight /= mass;
        }
        Ok(DiscreteMeasure { atoms })
    }

    pub fn dirac(point: SpherePoint) -> Self {
        DiscreteMeasure {
            atoms: vec![WeightedAtom { point, weight: 1.0 }],
        }
    }

    /// Equal weights on the given points (merging coincidences).
    pub fn uniform_on(points: Vec<SpherePoint>) -> Result<Self, MeasureError> {
        let w = 1.0 / points.len().max(1) as f64;
        Self::normalized(
            points
                .into_iter()
                .map(|point| WeightedAtom { point, weight: w })
                .collect(),
        )
    }

    fn canonicalize(mut atoms: Vec<WeightedAtom>) -> Result<Vec<WeightedAtom>, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        let dim = atoms[0].point.coords().len();
        for (index, a) in atoms.iter().enumerate() {
            if !(a.weight.is_finite() && a.weight >= 0.0) {
                return Err(MeasureError::BadWeight {
                    index,
                    weight: a.weight,
                });
            }
            if a.point.coords().len() != dim {
                return Err(MeasureError::MixedDimensions {
                    index,
                    got: a.point.coords().len(),
                    expected: dim,
                });
            }
        }
        atoms.sort_by(|a, b| a.point.lex_cmp(&b.point));

        // single sweep: a cluster representative is the lexicographically
        // smallest member; candidates further than the merge tolerance in the
        // first coordinate can never merge, so a sliding window suffices.
        let mut merged: Vec<WeightedAtom> = Vec::with_capacity(atoms.len());
        let mut window_start = 0usize;
        for atom in atoms.into_iter() {
            let x0 = atom.point.coords()[0];
            while window_start < merged.len()
                && merged[window_start].point.coords()[0] < x0 - ATOM_MERGE_TOL
            {
                window_start += 1;
            }
            let mut absorbed = false;
            for m in merged[window_start..].iter_mut() {
                if m.point.chordal_distance(&atom.point) < ATOM_MERGE_TOL {
                    m.weight += atom.weight;
                    absorbed = true;
                    break;
                }
            }
            if !absorbed {
                merged.push(atom);
            }
        }
        merged.retain(|a| a.weight > 0.0);
        if merged.is_empty() {
            return Err(MeasureError::Empty);
        }
        Ok(merged)
    }

    pub fn atoms(&self) -> &[WeightedAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Sphere dimension n of the support.
    pub fn dim(&self) -> usize {
        self.atoms[0].point.dim()
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum_by(&self.atoms, |a| a.weight)
    }

    pub fn max_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).fold(0.0, f64::max)
    }

    /// ∫ g dμ with a fixed-tree pairwise sum (order independent of threading).
    pub fn integrate(&self, g: impl Fn(&SpherePoint) -> f64) -> f64 {
        pairwise_sum_by(&self.atoms, |a| a.weight * g(&a.point))
    }

    pub fn support_points(&self) -> Vec<SpherePoint> {
        self.atoms.iter().map(|a| a.point.clone()).collect()
    }

    /// Serialize as a JSON array of {coords, weight} records with
    /// 17-significant-digit decimals.
    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "[")?;
        for (i, a) in self.atoms.iter().enumerate() {
            let coords = a
                .point
                .coords()
                .iter()
                .map(|c| format_f64(*c))
                .collect::<Vec<_>>()
                .join(",");
            let sep = if i + 1 == self.atoms.len() { "" } else { "," };
            writeln!(
                w,
                "  {{\"coords\":[{coords}],\"weight\":{}}}{sep}",
                format_f64(a.weight)
            )?;
        }
        writeln!(w, "]")
    }

    /// Serialize as CSV: `coords_0,...,coords_n,weight`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let ambient = self.atoms[0].point.coords().len();
        let header = (0..ambient)
            .map(|i| format!("coords_{i}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{header},weight")?;
        for a in &self.atoms {
            let coords = a
                .point
                .coords()
                .iter()
                .map(|c| format_f64(*c))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "{coords},{}", format_f64(a.weight))?;
        }
        Ok(())
    }

    pub fn read_json<R: std::io::Read>(r: R) -> Result<Self, MeasureError> {
        #[derive(serde::Deserialize)]
        struct Record {
            coords: Vec<f64>,
            weight: f64,
        }
        let records: Vec<Record> = serde_json::from_reader(r).map_err(|e| {
            MeasureError::Geometry(crate::error::GeometryError::ZeroVector(f64::NAN)).pipe_msg(e)
        })?;
        let atoms = records
            .into_iter()
            .map(|rec| {
                Ok(WeightedAtom {
                    point: SpherePoint::new(rec.coords.as_slice())?,
                    weight: rec.weight,
                })
            })
            .collect::<Result<Vec<_>, crate::error::GeometryError>>()?;
        DiscreteMeasure::new(atoms)
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self, MeasureError> {
        let reader = std::io::BufReader::new(r);
        let mut atoms = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|_| MeasureError::Empty)?;
            if lineno == 0 || line.trim().is_empty() {
                continue; // header
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().unwrap_or(f64::NAN))
                .collect();
            if fields.len() < 4 || fields.iter().any(|f| f.is_nan()) {
                return Err(MeasureError::BadWeight {
                    index: lineno,
                    weight: f64::NAN,
                });
            }
            let (coords, weight) = fields.split_at(fields.len() - 1);
            atoms.push(WeightedAtom {
                point: SpherePoint::new(coords)?,
                weight: weight[0],
            });
        }
        DiscreteMeasure::new(atoms)
    }
}

trait PipeMsg {
    fn pipe_msg(self, e: serde_json::Error) -> MeasureError;
}
impl PipeMsg for MeasureError {
    fn pipe_msg(self, e: serde_json::Error) -> MeasureError {
        // keep the serde message; the variant itself matters less here
        MeasureError::BadWeight {
            index: e.line(),
            weight: f64::NAN,
        }
    }
}

/// 17 significant decimal digits: enough to round-trip any f64 exactly.
pub fn format_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        // short exact form for integers keeps files readable
        format!("{:.1}", x)
    } else {
        format!("{:.16e}", x)
    }
}

/// Fixed-tree pairwise sum: deterministic and far more accurate than a naive
/// left fold on long vectors.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn pairwise_sum_by<T>(items: &[T], f: impl Fn(&T) -> f64 + Copy) -> f64 {
    if items.len() <= 32 {
        return items.iter().map(f).sum();
    }
    let mid = items.len() / 2;
    pairwise_sum_by(&items[..mid], f) + pairwise_sum_by(&items[mid..], f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{circle_points, sample_uniform, stereo_lift, ChartPoint};

    #[test]
    fn dirac_and_uniform_basics() {
        let d = DiscreteMeasure::dirac(SpherePoint::north_pole(2));
        assert_eq!(d.len(), 1);
        assert_eq!(d.total_mass(), 1.0);

        let u = DiscreteMeasure::uniform_on(circle_points(64, 0.1)).unwrap();
        assert_eq!(u.len(), 64);
        assert!((u.total_mass() - 1.0).abs() < MASS_TOL);
    }

    #[test]
    fn coincident_atoms_merge() {
        let p = SpherePoint::north_pole(2);
        let q = SpherePoint::normalized([1e-12, 0.0, 1.0].as_slice()).unwrap();
        let far = SpherePoint::south_pole(2);
        let mu = DiscreteMeasure::new(vec![
            WeightedAtom {
                point: p,
                weight: 0.25,
            },
            WeightedAtom {
                point: q,
                weight: 0.25,
            },
            WeightedAtom {
                point: far,
                weight: 0.5,
            },
        ])
        .unwrap();
        assert_eq!(mu.len(), 2);
        assert!((mu.max_weight() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_weights_compact_away() {
        let mu = DiscreteMeasure::new(vec![
            WeightedAtom {
                point: SpherePoint::north_pole(2),
                weight: 1.0,
            },
            WeightedAtom {
                point: SpherePoint::south_pole(2),
                weight: 0.0,
            },
        ])
        .unwrap();
        assert_eq!(mu.len(), 1);
    }

    #[test]
    fn bad_mass_rejected() {
        let err = DiscreteMeasure::new(vec![WeightedAtom {
            point: SpherePoint::north_pole(2),
            weight: 0.5,
        }])
        .unwrap_err();
        assert!(matches!(err, MeasureError::MassNotNormalized { .. }));
    }

    #[test]
    fn merge_is_order_independent() {
        let pts = sample_uniform(2, 300, 5);
        let atoms: Vec<WeightedAtom> = pts
            .iter()
            .map(|p| WeightedAtom {
                point: p.clone(),
                weight: 1.0 / 300.0,
            })
            .collect();
        let mut reversed = atoms.clone();
        reversed.reverse();
        let a = DiscreteMeasure::normalized(atoms).unwrap();
        let b = DiscreteMeasure::normalized(reversed).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.atoms().iter().zip(b.atoms().iter()) {
            assert_eq!(x.point.coords(), y.point.coords());
            assert_eq!(x.weight.to_bits(), y.weight.to_bits());
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mu = DiscreteMeasure::uniform_on(sample_uniform(2, 97, 8)).unwrap();
        let mut buf = Vec::new();
        mu.write_json(&mut buf).unwrap();
        let back = DiscreteMeasure::read_json(buf.as_slice()).unwrap();
        assert_eq!(mu.len(), back.len());
        for (a, b) in mu.atoms().iter().zip(back.atoms().iter()) {
            assert_eq!(a.weight.to_bits(), b.weight.to_bits());
            assert_eq!(a.point.coords(), b.point.coords());
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mu = DiscreteMeasure::uniform_on(sample_uniform(3, 41, 9)).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        let back = DiscreteMeasure::read_csv(buf.as_slice()).unwrap();
        assert_eq!(mu.len(), back.len());
        for (a, b) in mu.atoms().iter().zip(back.atoms().iter()) {
            assert_eq!(a.weight.to_bits(), b.weight.to_bits());
        }
    }

    #[test]
    fn integrate_uses_weights() {
        let mu = DiscreteMeasure::new(vec![
            WeightedAtom {
                point: stereo_lift(ChartPoint::finite(1.0, 0.0)),
                weight: 0.75,
            },
            WeightedAtom {
                point: stereo_lift(ChartPoint::finite(-1.0, 0.0)),
                weight: 0.25,
            },
        ])
        .unwrap();
        let mean_x = mu.integrate(|p| p.coords()[0]);
        assert!((mean_x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_matches_exact_rational() {
        let xs: Vec<f64> = (0..100_000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let naive: f64 = xs.iter().sum();
        let pw = pairwise_sum(&xs);
        assert!((pw - naive).abs() < 1e-9);
    }
}
