//! Sampling, profiles and Monte Carlo functionals of a generator.

use std::io::Write;

use super::mc::{self, Moments};
use super::Generator;
use crate::dependence::{positive_weighted_max, Estimate, McConfig, Point, SpectralAtoms};
use crate::error::{Error, Result};
use crate::output::fmt_f64;

/// `n` draws of `A`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    dim: usize,
    data: Vec<f64>,
}

impl SampleBatch {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Column means with standard errors.
    pub fn column_means(&self) -> Vec<Estimate> {
        let mut acc = vec![Moments::default(); self.dim];
        for row in self.rows() {
            for (m, v) in acc.iter_mut().zip(row) {
                m.push(*v);
            }
        }
        acc.iter().map(Moments::estimate).collect()
    }

    /// CSV with a header of coordinate names `a1, ..., ad`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (1..=self.dim).map(|j| format!("a{j}")).collect();
        let io = |e: csv::Error| Error::Domain(e.to_string());
        w.write_record(&header).map_err(io)?;
        for row in self.rows() {
            w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Domain(e.to_string()))?;
        Ok(())
    }
}

/// `n` standardized draws of `A`, reproducible from `seed`.
pub fn sample_a(gen: &Generator, n: usize, seed: u64) -> Result<SampleBatch> {
    let store = mc::materialize(gen, &McConfig::new(n, seed))?;
    Ok(SampleBatch { dim: gen.dim(), data: store.rows().flatten().copied().collect() })
}

/// Common-random-numbers estimates of `l_A(x) = E[max_j (x_j A_j)^+]`.
pub fn mc_ell(gen: &Generator, xs: &[Point], cfg: &McConfig) -> Result<Vec<Estimate>> {
    for x in xs {
        if x.dim() != gen.dim() {
            return Err(Error::DimensionMismatch { expected: gen.dim(), got: x.dim() });
        }
    }
    mc::estimate_means(gen, cfg, None, xs.len(), |a, out| {
        for (o, x) in out.iter_mut().zip(xs) {
            *o = positive_weighted_max(x.coords(), a);
        }
    })
}

/// `G(x) = exp{-l_A(1/x)}`, the attractor distribution function with unit
/// Fréchet margins. Returns exactly 0 when some `x_j = 0`.
pub fn attractor_cdf(gen: &Generator, x: &Point, cfg: &McConfig) -> Result<Estimate> {
    if x.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { expected: gen.dim(), got: x.dim() });
    }
    if x.coords().contains(&0.0) {
        return Ok(Estimate::exact(0.0));
    }
    let inv = Point::new(x.coords().iter().map(|v| 1.0 / v).collect())?;
    let ell = mc_ell(gen, std::slice::from_ref(&inv), cfg)?[0];
    let value = (-ell.value).exp();
    Ok(Estimate { value, se: ell.se.map(|s| value * s) })
}

/// Draws of `(W, R)` with `R = sum_j A_j^+` and `W = A^+ / R`
/// (the barycenter when `R = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSample {
    dim: usize,
    profiles: Vec<f64>,
    magnitudes: Vec<f64>,
}

impl ProfileSample {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    pub fn profile(&self, i: usize) -> &[f64] {
        &self.profiles[i * self.dim..(i + 1) * self.dim]
    }

    pub fn magnitude(&self, i: usize) -> f64 {
        self.magnitudes[i]
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// `sum_i R_i f(W_i) / (n d)`, an estimate of `int f dQ`.
    pub fn weighted_mean<F: Fn(&[f64]) -> f64>(&self, f: F) -> Estimate {
        let mut m = Moments::default();
        for i in 0..self.len() {
            m.push(self.magnitudes[i] * f(self.profile(i)));
        }
        let d = self.dim as f64;
        Estimate { value: m.mean / d, se: Some(m.std_error() / d) }
    }

    /// R-weighted mean of each `W_j`; each estimates `1/d`.
    pub fn mean_profile(&self) -> Vec<Estimate> {
        (0..self.dim).map(|j| self.weighted_mean(|w| w[j])).collect()
    }

    /// Sample mean of `R`; estimates `d`.
    pub fn mean_magnitude(&self) -> Estimate {
        let mut m = Moments::default();
        for &r in &self.magnitudes {
            m.push(r);
        }
        m.estimate()
    }
}

pub(crate) fn split_profile(a: &[f64], w: &mut [f64]) -> f64 {
    let r: f64 = a.iter().map(|v| v.max(0.0)).sum();
    if r > 0.0 {
        for (w, v) in w.iter_mut().zip(a) {
            *w = v.max(0.0) / r;
        }
    } else {
        w.fill(1.0 / a.len() as f64);
    }
    r
}

pub fn sample_profiles(gen: &Generator, n: usize, seed: u64) -> Result<ProfileSample> {
    let batch = sample_a(gen, n, seed)?;
    let d = gen.dim();
    let mut profiles = vec![0.0; batch.len() * d];
    let mut magnitudes = Vec::with_capacity(batch.len());
    for (row, w) in batch.rows().zip(profiles.chunks_exact_mut(d)) {
        magnitudes.push(split_profile(row, w));
    }
    Ok(ProfileSample { dim: d, profiles, magnitudes })
}

/// Estimate of `H(face I) = E[R 1{min_{j in I} A_j > 0 >= max_{j not in I} A_j}]`.
pub fn face_mass(gen: &Generator, subset: &[usize], n: usize, seed: u64) -> Result<Estimate> {
    let idx = crate::dependence::normalize_subset(subset, gen.dim())?;
    let mut inside = vec![false; gen.dim()];
    for &j in &idx {
        inside[j] = true;
    }
    let est = mc::estimate_means(gen, &McConfig::new(n, seed), None, 1, |a, out| {
        let on_face = a.iter().zip(&inside).all(|(&v, &i)| if i { v > 0.0 } else { v <= 0.0 });
        out[0] = if on_face { a.iter().map(|v| v.max(0.0)).sum() } else { 0.0 };
    })?;
    Ok(est[0])
}

/// Spectral atoms `(a_k^+ / r_k, p_k r_k)` of a discrete generator, where
/// `r_k = sum_j a_kj^+`; atoms with `r_k = 0` carry no mass and are dropped.
pub fn profile_atoms(gen: &Generator) -> Result<SpectralAtoms> {
    let law = gen.discrete_law().ok_or_else(|| {
        Error::Unsupported(format!("the {} generator has no finite law", gen.kind_name()))
    })?;
    let d = gen.dim();
    let mut atoms = Vec::with_capacity(law.len());
    for (row, p) in law {
        let mut w = vec![0.0; d];
        let r = split_profile(&row, &mut w);
        if r > 0.0 && p > 0.0 {
            atoms.push((w, p * r));
        }
    }
    SpectralAtoms::new(d, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{dirichlet11_ell, husler_reiss_ell, schlather_ell};
    use crate::dependence::{ell_from_spectral, SpectralAtoms};
    use crate::generators::{indicator_thin_pair_generator, IndicatorLaw};

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn atoms_of(a: &SpectralAtoms) -> Vec<(Vec<f64>, f64)> {
        a.atoms().iter().map(|x| (x.weight.weights().to_vec(), x.mass)).collect()
    }

    #[test]
    fn constant_rows() {
        let g = Generator::constant(vec![1.0, 1.0, 1.0]).unwrap();
        let b = sample_a(&g, 50, 1).unwrap();
        assert_eq!(b.len(), 50);
        assert!(b.rows().all(|r| r == [1.0, 1.0, 1.0]));
        let est = mc_ell(&g, &[pt(&[0.2, 1.5, 0.7])], &McConfig::new(100, 3)).unwrap();
        assert_eq!(est[0], Estimate { value: 1.5, se: Some(0.0) });
    }

    #[test]
    fn discrete_rows_are_atoms() {
        let g = Generator::discrete_atoms(vec![vec![2.0, 0.0], vec![0.0, 2.0]], vec![0.5, 0.5]).unwrap();
        let b = sample_a(&g, 200, 5).unwrap();
        assert!(b.rows().all(|r| r == [2.0, 0.0] || r == [0.0, 2.0]));
        assert!(b.rows().any(|r| r == [2.0, 0.0]) && b.rows().any(|r| r == [0.0, 2.0]));
    }

    #[test]
    fn sample_is_reproducible() {
        let g = Generator::lognormal_pair(0.4, 1.0).unwrap();
        assert_eq!(sample_a(&g, 300, 8).unwrap(), sample_a(&g, 300, 8).unwrap());
        assert_ne!(sample_a(&g, 300, 8).unwrap(), sample_a(&g, 300, 9).unwrap());
    }

    #[test]
    fn dirichlet_means_are_one() {
        let g = Generator::dirichlet_gamma(vec![1.0, 1.0]).unwrap();
        for e in sample_a(&g, 100_000, 11).unwrap().column_means() {
            assert!((e.value - 1.0).abs() <= 3.0 * e.se.unwrap());
        }
    }

    #[test]
    fn csv_export_has_header() {
        let g = Generator::constant(vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        sample_a(&g, 2, 0).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a1,a2\n1,1\n1,1\n");
    }

    #[test]
    fn gaussian_and_lognormal_oracles() {
        let cfg = McConfig::new(1_000_000, 41);
        let g = Generator::gaussian_pair(0.3).unwrap();
        let e = mc_ell(&g, &[pt(&[1.0, 1.0])], &cfg).unwrap()[0];
        assert!((e.value - schlather_ell(0.3, 1.0, 1.0).unwrap()).abs() <= 3.0 * e.se.unwrap());
        let g = Generator::lognormal_pair(0.5, 1.2).unwrap();
        let a = 1.2 * (2.0f64 * 0.5).sqrt();
        let e = mc_ell(&g, &[pt(&[1.0, 2.0])], &cfg).unwrap()[0];
        assert!((e.value - husler_reiss_ell(a, 1.0, 2.0).unwrap()).abs() <= 3.0 * e.se.unwrap());
    }

    #[test]
    fn attractor_cdf_examples() {
        let cfg = McConfig::new(10_000, 1);
        let g = Generator::constant(vec![1.0, 1.0, 1.0]).unwrap();
        let v = attractor_cdf(&g, &pt(&[2.0, 2.0, 2.0]), &cfg).unwrap();
        assert!((v.value - (-0.5f64).exp()).abs() < 1e-15);
        let indep = Generator::discrete_atoms(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5]).unwrap();
        let v = attractor_cdf(&indep, &pt(&[1.0, 1.0]), &cfg).unwrap();
        assert!((v.value - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(attractor_cdf(&indep, &pt(&[0.0, 1.0]), &cfg).unwrap().value, 0.0);
        let g = Generator::dirichlet_gamma(vec![1.0, 1.0]).unwrap();
        let v = attractor_cdf(&g, &pt(&[1.0, 1.0]), &McConfig::new(400_000, 3)).unwrap();
        assert!((v.value - (-1.5f64).exp()).abs() <= 3.0 * v.se.unwrap());
        assert!((dirichlet11_ell(1.0, 1.0).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn profile_atom_examples() {
        let g = Generator::discrete_atoms(vec![vec![2.0, 0.0], vec![0.0, 2.0]], vec![0.5, 0.5]).unwrap();
        assert_eq!(atoms_of(&profile_atoms(&g).unwrap()), vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0)]);
        let g = Generator::constant(vec![1.0, 1.0]).unwrap();
        assert_eq!(atoms_of(&profile_atoms(&g).unwrap()), vec![(vec![0.5, 0.5], 2.0)]);
        let g = Generator::discrete_atoms(vec![vec![1.5, 0.5], vec![0.5, 1.5]], vec![0.5, 0.5]).unwrap();
        assert_eq!(atoms_of(&profile_atoms(&g).unwrap()), vec![(vec![0.75, 0.25], 1.0), (vec![0.25, 0.75], 1.0)]);
        assert!(profile_atoms(&Generator::gaussian_pair(0.0).unwrap()).is_err());
    }

    #[test]
    fn profile_atoms_reproduce_exact_ell() {
        let g = Generator::discrete_atoms(
            vec![vec![3.0, -1.0, 0.5], vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![-1.0, -1.0, -1.0]],
            vec![0.2, 0.3, 0.4, 0.1],
        )
        .unwrap();
        let atoms = profile_atoms(&g).unwrap();
        let xs: Vec<Point> = [[1.0, 1.0, 1.0], [0.2, 3.0, 0.5], [2.0, 0.0, 0.1]].iter().map(|v| pt(v)).collect();
        let mc = mc_ell(&g, &xs, &McConfig::new(200_000, 6)).unwrap();
        for (x, e) in xs.iter().zip(mc) {
            let exact = ell_from_spectral(&atoms, x).unwrap();
            assert!((exact - g.exact_ell(x.coords()).unwrap()).abs() < 1e-12);
            assert!((e.value - exact).abs() <= 3.0 * e.se.unwrap());
        }
    }

    #[test]
    fn profile_sample_examples() {
        let g = Generator::constant(vec![1.0, 1.0, 1.0]).unwrap();
        let s = sample_profiles(&g, 20, 0).unwrap();
        for i in 0..s.len() {
            assert_eq!(s.magnitude(i), 3.0);
            assert!(s.profile(i).iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
        }
        let g = Generator::discrete_atoms(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5]).unwrap();
        let s = sample_profiles(&g, 100, 0).unwrap();
        assert!((0..s.len()).all(|i| s.profile(i) == [1.0, 0.0] || s.profile(i) == [0.0, 1.0]));
        let g = Generator::dirichlet_gamma(vec![0.5, 2.0, 1.0]).unwrap();
        let s = sample_profiles(&g, 200_000, 12).unwrap();
        for e in s.mean_profile() {
            assert!((e.value - 1.0 / 3.0).abs() <= 3.0 * e.se.unwrap(), "{e:?}");
        }
        let r = s.mean_magnitude();
        assert!((r.value - 3.0).abs() <= 3.0 * r.se.unwrap());
    }

    #[test]
    fn face_masses() {
        let g = Generator::constant(vec![1.0, 2.0]).unwrap();
        assert_eq!(face_mass(&g, &[0, 1], 100, 0).unwrap().value, 2.0);
        assert_eq!(face_mass(&g, &[0], 100, 0).unwrap().value, 0.0);
        let indep = Generator::discrete_atoms(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5]).unwrap();
        let a = face_mass(&indep, &[0], 100_000, 1).unwrap();
        let b = face_mass(&indep, &[1], 100_000, 1).unwrap();
        assert!((a.value - 1.0).abs() <= 3.0 * a.se.unwrap());
        assert!((a.value + b.value - 2.0).abs() < 1e-12);
        let thinned = indicator_thin_pair_generator(Generator::constant(vec![1.0, 1.0]).unwrap(), 0.8, 0.8, 0.7).unwrap();
        assert!(face_mass(&thinned, &[0], 10_000, 2).unwrap().value > 0.0);
        let law = IndicatorLaw::new(3, vec![(vec![0, 1, 2], 0.6), (vec![0], 0.2), (vec![1, 2], 0.2)]).unwrap();
        let g = Generator::indicators(Generator::dirichlet_gamma(vec![1.0, 1.0, 1.0]).unwrap(), law).unwrap();
        let total: f64 = [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]]
            .iter()
            .map(|s| face_mass(&g, s, 50_000, 3).unwrap().value)
            .sum();
        assert!((total - 3.0).abs() < 0.05, "{total}");
    }
}
