//! Sign-changing weights `a(x)` and the components of their positive set.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::Scalar;

/// Compactly supported bump `amplitude * max(0, 1 - (|x - c| / r)^2)^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump<T> {
    pub center: [T; 2],
    pub radius: T,
    pub amplitude: T,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec<T> {
    /// One value per node, in grid order.
    Tabulated(Vec<T>),
    /// Constant background plus a sum of bumps.
    Bumps { background: T, bumps: Vec<Bump<T>> },
    /// Piecewise constant along the first axis. `values[k]` holds between
    /// `breakpoints[k-1]` and `breakpoints[k]`. A node sitting on a breakpoint
    /// takes the smaller of the two neighbouring values, so the positive set
    /// stays open.
    Piecewise { breakpoints: Vec<T>, values: Vec<T> },
}

/// Node values of `a` with the discrete positive set split into components.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField<T> {
    a: Field<T>,
    labels: Vec<Option<usize>>,
    n_components: usize,
}

impl<T: Scalar> WeightSpec<T> {
    fn validate(&self, grid: &Grid<T>) -> Result<()> {
        match self {
            WeightSpec::Tabulated(v) => {
                if v.len() != grid.node_count() {
                    return Err(Error::WeightDomain(format!(
                        "{} tabulated values for {} nodes",
                        v.len(),
                        grid.node_count()
                    )));
                }
            }
            WeightSpec::Bumps { bumps, .. } => {
                if let Some(b) = bumps.iter().find(|b| !(b.radius > T::zero())) {
                    return Err(Error::WeightDomain(format!(
                        "bump radius {} must be positive",
                        b.radius
                    )));
                }
            }
            WeightSpec::Piecewise {
                breakpoints,
                values,
            } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(Error::WeightDomain(format!(
                        "{} breakpoints need {} values, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        values.len()
                    )));
                }
                let axis = &grid.axes()[0];
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::WeightDomain(
                        "breakpoints must be strictly increasing".into(),
                    ));
                }
                if breakpoints.iter().any(|&b| b <= axis.lo || b >= axis.hi) {
                    return Err(Error::WeightDomain(format!(
                        "breakpoints must lie inside ({}, {})",
                        axis.lo, axis.hi
                    )));
                }
            }
        }
        Ok(())
    }

    fn value_at(&self, x: T, y: T, grid: &Grid<T>) -> T {
        match self {
            WeightSpec::Tabulated(_) => unreachable!("tabulated weights are read by index"),
            WeightSpec::Bumps { background, bumps } => {
                let mut a = *background;
                for b in bumps {
                    let dx = x - b.center[0];
                    let dy = if grid.dim() == 2 {
                        y - b.center[1]
                    } else {
                        T::zero()
                    };
                    let s = (dx * dx + dy * dy) / (b.radius * b.radius);
                    if s < T::one() {
                        let t = T::one() - s;
                        a += b.amplitude * t * t;
                    }
                }
                a
            }
            WeightSpec::Piecewise {
                breakpoints,
                values,
            } => {
                let axis = &grid.axes()[0];
                let snap = T::c(1e-9) * (axis.hi - axis.lo);
                let mut k = 0;
                while k < breakpoints.len() {
                    let b = breakpoints[k];
                    if (x - b).abs() <= snap {
                        return values[k].min(values[k + 1]);
                    }
                    if x < b {
                        break;
                    }
                    k += 1;
                }
                values[k]
            }
        }
    }
}

/// Samples the weight on the grid and labels the positive set.
pub fn evaluate_weight<T: Scalar>(spec: &WeightSpec<T>, grid: &Grid<T>) -> Result<WeightField<T>> {
    spec.validate(grid)?;
    let a = match spec {
        WeightSpec::Tabulated(v) => Field::new(grid, v.clone())?,
        _ => Field::new(
            grid,
            (0..grid.node_count())
                .map(|i| {
                    let [x, y] = grid.coords(i);
                    spec.value_at(x, y, grid)
                })
                .collect(),
        )?,
    };
    Ok(WeightField::from_field(grid, a))
}

/// Labels connected components of `{a > 0}`; labels start at 1 and are
/// assigned in order of each component's lowest node index.
pub(crate) fn label_components<T: Scalar>(grid: &Grid<T>, a: &[T]) -> (Vec<Option<usize>>, usize) {
    let mut labels = vec![None; a.len()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..a.len() {
        if a[start] <= T::zero() || labels[start].is_some() {
            continue;
        }
        next += 1;
        labels[start] = Some(next);
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for j in grid.neighbors(i) {
                if a[j] > T::zero() && labels[j].is_none() {
                    labels[j] = Some(next);
                    queue.push_back(j);
                }
            }
        }
    }
    (labels, next)
}

impl<T: Scalar> WeightField<T> {
    pub fn from_field(grid: &Grid<T>, a: Field<T>) -> Self {
        let (labels, n_components) = label_components(grid, a.values());
        WeightField {
            a,
            labels,
            n_components,
        }
    }

    pub fn values(&self) -> &[T] {
        self.a.values()
    }

    pub fn field(&self) -> &Field<T> {
        &self.a
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn label_of(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    /// Both a positive and a negative node exist.
    pub fn changes_sign(&self) -> bool {
        let v = self.a.values();
        v.iter().any(|&x| x > T::zero()) && v.iter().any(|&x| x < T::zero())
    }

    pub fn component_nodes(&self, label: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| (*l == Some(label)).then_some(i))
            .collect()
    }

    /// `c * a`; positive `c` keeps the labels.
    pub fn scaled(&self, c: T) -> Self {
        assert!(c > T::zero(), "weight scale must be positive");
        WeightField {
            a: self.a.scaled(c),
            labels: self.labels.clone(),
            n_components: self.n_components,
        }
    }
}

/// Neumann admissibility: the trapezoidal integral of `a` is negative.
pub fn neumann_admissible<T: Scalar>(w: &WeightField<T>, grid: &Grid<T>) -> bool {
    grid.integrate_nodes(w.field()) < T::zero()
}

/// Nodes a restricted solve pins to zero: the positive-set nodes whose label
/// is not in `keep`.
pub fn component_mask<T: Scalar>(w: &WeightField<T>, keep: &[usize]) -> Result<Vec<bool>> {
    if let Some(&bad) = keep.iter().find(|&&l| l == 0 || l > w.n_components) {
        return Err(Error::UnknownLabel(bad));
    }
    Ok(w.labels
        .iter()
        .map(|l| matches!(l, Some(k) if !keep.contains(k)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryMode;

    fn two_sided(n: usize, neg: f64) -> (Grid<f64>, WeightField<f64>) {
        let g = Grid::<f64>::interval(0.0, 1.0, n, BoundaryMode::Dirichlet).unwrap();
        let spec = WeightSpec::Piecewise {
            breakpoints: vec![0.3, 0.7],
            values: vec![1.0, neg, 1.0],
        };
        let w = evaluate_weight(&spec, &g).unwrap();
        (g, w)
    }

    #[test]
    fn piecewise_two_components() {
        let (_, w) = two_sided(101, -5.0);
        assert_eq!(w.n_components(), 2);
        assert!(w.changes_sign());
        // breakpoint nodes belong to the closed negative interval
        assert_eq!(w.values()[30], -5.0);
        assert_eq!(w.values()[70], -5.0);
        assert_eq!(w.values()[29], 1.0);
    }

    #[test]
    fn negative_weight_has_no_components() {
        let g = Grid::<f64>::interval(0.0, 1.0, 11, BoundaryMode::Neumann).unwrap();
        let w = evaluate_weight(&WeightSpec::Tabulated(vec![-1.0; 11]), &g).unwrap();
        assert_eq!(w.n_components(), 0);
        assert!(!w.changes_sign());
        assert!(neumann_admissible(&w, &g));
        let w = evaluate_weight(&WeightSpec::Tabulated(vec![1.0; 11]), &g).unwrap();
        assert!(!neumann_admissible(&w, &g));
    }

    #[test]
    fn two_bump_weight_is_neumann_admissible() {
        let g = Grid::<f64>::interval(0.0, 1.0, 201, BoundaryMode::Neumann).unwrap();
        let spec = WeightSpec::Piecewise {
            breakpoints: vec![0.1, 0.9],
            values: vec![1.0, -10.0, 1.0],
        };
        let w = evaluate_weight(&spec, &g).unwrap();
        let integral = g.integrate_nodes(w.field());
        assert!(neumann_admissible(&w, &g));
        // 0.2 - 8 up to the half-cells at the breakpoints
        assert!((integral - (0.2 - 8.0)).abs() < 0.06, "{integral}");
    }

    #[test]
    fn two_bumps_in_square() {
        let g = Grid::<f64>::rectangle((0.0, 1.0), (0.0, 1.0), (41, 41), BoundaryMode::Dirichlet)
            .unwrap();
        let bump = |cx: f64, cy: f64| Bump {
            center: [cx, cy],
            radius: 0.1,
            amplitude: 3.0,
        };
        let spec = WeightSpec::Bumps {
            background: -1.0,
            bumps: vec![bump(0.3, 0.3), bump(0.7, 0.6)],
        };
        let w = evaluate_weight(&spec, &g).unwrap();
        assert_eq!(w.n_components(), 2);
    }

    #[test]
    fn component_mask_examples() {
        let (_, w) = two_sided(21, -5.0);
        assert!(component_mask(&w, &[1, 2]).unwrap().iter().all(|&m| !m));
        let none = component_mask(&w, &[]).unwrap();
        assert_eq!(
            none.iter().filter(|&&m| m).count(),
            w.labels().iter().flatten().count()
        );
        let right = component_mask(&w, &[1]).unwrap();
        let nodes: Vec<usize> = right
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        assert_eq!(nodes, w.component_nodes(2));
        assert_eq!(component_mask(&w, &[3]), Err(Error::UnknownLabel(3)));
    }

    #[test]
    fn spec_validation() {
        let g = Grid::<f64>::interval(0.0, 1.0, 11, BoundaryMode::Dirichlet).unwrap();
        let bad = WeightSpec::Piecewise {
            breakpoints: vec![1.5],
            values: vec![1.0, -1.0],
        };
        assert!(matches!(
            evaluate_weight(&bad, &g),
            Err(Error::WeightDomain(_))
        ));
        let bad = WeightSpec::Tabulated(vec![1.0; 3]);
        assert!(matches!(
            evaluate_weight(&bad, &g),
            Err(Error::WeightDomain(_))
        ));
        let bad = WeightSpec::Bumps {
            background: -1.0,
            bumps: vec![Bump {
                center: [0.5, 0.0],
                radius: 0.0,
                amplitude: 1.0,
            }],
        };
        assert!(matches!(
            evaluate_weight(&bad, &g),
            Err(Error::WeightDomain(_))
        ));
    }
}
