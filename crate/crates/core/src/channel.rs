//! Cascaded BS–RIS–UE multipath channel generation.
//!
//! Every link is a tapped delay line: a run of leading zero taps that models
//! the propagation delay, followed by a Rician-faded block whose first tap
//! carries the deterministic line-of-sight component. The BS–RIS and RIS–UE
//! links of each reflecting element are convolved into one cascaded channel.
//!
//! Channel sets are expressed in the receiver's timing frame: the earliest
//! arriving reflected path is placed at tap 0.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

pub type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Positions of the BS, the UE and the reference element (1, 1) of each RIS.
///
/// Every RIS is a uniform planar array lying in the x–z plane with `grid.0`
/// columns along x and `grid.1` rows along z.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs_pos: Vec3,
    pub ue_pos: Vec3,
    pub ris_ref_pos: Vec<Vec3>,
    /// Element spacing in meters.
    pub element_spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// `(M_x, M_z)` element counts.
    pub grid: (usize, usize),
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let finite = |p: &Vec3| p.iter().all(|c| c.is_finite());
        if !finite(&self.bs_pos) || !finite(&self.ue_pos) || !self.ris_ref_pos.iter().all(finite) {
            return Err(Error::InvalidScenario("non-finite position".into()));
        }
        if self.ris_ref_pos.is_empty() {
            return Err(Error::InvalidScenario("at least one RIS is required".into()));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(Error::InvalidScenario("element spacing must be positive".into()));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidScenario("wavelength must be positive".into()));
        }
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(Error::InvalidScenario("RIS grid must have at least one element".into()));
        }
        Ok(())
    }

    pub fn num_ris(&self) -> usize {
        self.ris_ref_pos.len()
    }

    pub fn elements_per_ris(&self) -> usize {
        self.grid.0 * self.grid.1
    }

    /// 1-based `(m_x, m_z)` grid coordinates of the 0-based element index `m`.
    /// Elements are numbered column-first along x.
    pub fn element_coords(&self, m: usize) -> (usize, usize) {
        (m % self.grid.0 + 1, m / self.grid.0 + 1)
    }

    pub fn bs_ris_distance(&self, k: usize) -> f64 {
        norm(sub(self.ris_ref_pos[k], self.bs_pos))
    }

    pub fn ris_ue_distance(&self, k: usize) -> f64 {
        norm(sub(self.ue_pos, self.ris_ref_pos[k]))
    }
}

/// Large-scale and small-scale fading statistics, all linear scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingConfig {
    /// Path gain at the 1 m reference distance.
    pub c0: f64,
    pub alpha_br: f64,
    pub alpha_ru: f64,
    /// Rician factors per RIS; `f64::INFINITY` means pure LoS.
    pub rician_br: Vec<f64>,
    pub rician_ru: Vec<f64>,
    /// Sampling rate in Hz.
    pub sampling_rate: f64,
    pub nonzero_taps_br: Vec<usize>,
    pub nonzero_taps_ru: Vec<usize>,
}

impl FadingConfig {
    pub fn validate(&self, num_ris: usize) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidScenario("C0 must be positive".into()));
        }
        if !(self.alpha_br >= 0.0 && self.alpha_ru >= 0.0) {
            return Err(Error::InvalidScenario("path-loss exponents must be non-negative".into()));
        }
        if !(self.sampling_rate > 0.0 && self.sampling_rate.is_finite()) {
            return Err(Error::InvalidScenario("sampling rate must be positive".into()));
        }
        for (name, len) in [
            ("rician_br", self.rician_br.len()),
            ("rician_ru", self.rician_ru.len()),
            ("nonzero_taps_br", self.nonzero_taps_br.len()),
            ("nonzero_taps_ru", self.nonzero_taps_ru.len()),
        ] {
            if len != num_ris {
                return Err(Error::InvalidScenario(format!("{name} has {len} entries for {num_ris} RISs")));
            }
        }
        if self.rician_br.iter().chain(&self.rician_ru).any(|z| !(*z >= 0.0)) {
            return Err(Error::InvalidScenario("Rician factors must be non-negative".into()));
        }
        if self.nonzero_taps_br.iter().chain(&self.nonzero_taps_ru).any(|&l| l == 0) {
            return Err(Error::InvalidScenario("each link needs at least one non-zero tap".into()));
        }
        Ok(())
    }
}

/// Complex baseband channel taps starting at `first_tap_index`.
///
/// Taps before `first_tap_index` are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TapVector {
    pub first_tap_index: usize,
    pub taps: Vec<Complex64>,
}

impl TapVector {
    pub fn new(first_tap_index: usize, taps: Vec<Complex64>) -> Self {
        assert!(!taps.is_empty(), "tap vector must hold at least one tap");
        Self { first_tap_index, taps }
    }

    /// A single unit-gain-scaled tap at `index`.
    pub fn impulse(index: usize, value: Complex64) -> Self {
        Self::new(index, vec![value])
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Number of taps from index 0 up to and including the last stored tap.
    pub fn span(&self) -> usize {
        self.first_tap_index + self.taps.len()
    }

    /// Tap at absolute index `l`, zero outside the stored range.
    pub fn get(&self, l: usize) -> Complex64 {
        l.checked_sub(self.first_tap_index).and_then(|i| self.taps.get(i).copied()).unwrap_or_default()
    }

    pub fn power(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    /// Zero-padded dense copy of length `len` (must cover the span).
    pub fn to_dense(&self, len: usize) -> Vec<Complex64> {
        assert!(len >= self.span(), "dense length {len} shorter than span {}", self.span());
        let mut out = vec![Complex64::default(); len];
        out[self.first_tap_index..self.span()].copy_from_slice(&self.taps);
        out
    }
}

/// Linear convolution of two tap vectors; leading-zero offsets add.
pub fn cascade(u: &TapVector, v: &TapVector) -> TapVector {
    let mut taps = vec![Complex64::default(); u.len() + v.len() - 1];
    for (i, a) in u.taps.iter().enumerate() {
        for (j, b) in v.taps.iter().enumerate() {
            taps[i + j] += a * b;
        }
    }
    TapVector::new(u.first_tap_index + v.first_tap_index, taps)
}

/// Phase offset of the LoS ray at element `(m_x, m_z)` relative to element
/// `(1, 1)` for a plane wave with the given elevation and azimuth.
pub fn los_phase_offset(m_x: usize, m_z: usize, elevation: f64, azimuth: f64, spacing: f64, wavelength: f64) -> f64 {
    let k = 2.0 * PI / wavelength;
    k * (m_x as f64 - 1.0) * spacing * elevation.cos() * azimuth.cos()
        + k * (m_z as f64 - 1.0) * spacing * elevation.sin()
}

/// Arrival (BS side) and departure (UE side) angles at one RIS.
///
/// With `(el, az)` the unit vector from the RIS toward the far end is
/// `(-cos el cos az, cos el sin az, sin el)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAngles {
    pub aoa_el: f64,
    pub aoa_az: f64,
    pub aod_el: f64,
    pub aod_az: f64,
}

impl LinkAngles {
    pub fn direction(el: f64, az: f64) -> Vec3 {
        [-el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
    }
}

fn angles_toward(from: Vec3, to: Vec3) -> Result<(f64, f64)> {
    let d = sub(to, from);
    let horizontal = d[0].hypot(d[1]);
    if horizontal <= 0.0 {
        return Err(Error::InvalidScenario("zero horizontal separation between RIS and link endpoint".into()));
    }
    Ok((d[2].atan2(horizontal), d[1].atan2(-d[0])))
}

/// Angles of arrival and departure at RIS `k` (0-based).
///
/// For the standard layout (BS at the origin, RIS `k` at
/// `(d_x, -(k+1) d_y, h)`, equal BS/RIS heights) these reduce to
/// `aoa_el = 0`, `aoa_az = atan((k+1) d_y / d_x)`,
/// `aod_el = -atan(h / r)` and `aod_az = π/2 + atan((x_ue - d_x) / ((k+1) d_y))`.
pub fn link_angles(geometry: &Geometry, k: usize) -> Result<LinkAngles> {
    let ris =
        *geometry.ris_ref_pos.get(k).ok_or_else(|| Error::InvalidScenario(format!("RIS index {k} out of range")))?;
    let (aoa_el, aoa_az) = angles_toward(ris, geometry.bs_pos)?;
    let (aod_el, aod_az) = angles_toward(ris, geometry.ue_pos)?;
    Ok(LinkAngles { aoa_el, aoa_az, aod_el, aod_az })
}

/// Distance-dependent power gain `C0 · dist^(-α)`.
pub fn path_gain(c0: f64, dist: f64, alpha: f64) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::InvalidScenario(format!("non-positive link distance {dist}")));
    }
    Ok(c0 * dist.powf(-alpha))
}

/// Integer propagation delay in samples, rounded half away from zero.
pub fn propagation_delay_taps(dist: f64, sampling_rate: f64) -> usize {
    (dist * sampling_rate / SPEED_OF_LIGHT).round() as usize
}

/// Which hop of the reflected path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    BsRis,
    RisUe,
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Rician block of `nonzero` taps whose first tap carries the LoS ray with
/// phase `los_phase`. The block is normalized to unit expected power.
fn rician_taps<R: Rng + ?Sized>(rician: f64, nonzero: usize, los_phase: f64, rng: &mut R) -> Vec<Complex64> {
    let los = Complex64::from_polar(1.0, los_phase);
    if rician.is_infinite() {
        let mut taps = vec![Complex64::default(); nonzero];
        taps[0] = los;
        return taps;
    }
    let scale = 1.0 / (rician + nonzero as f64).sqrt();
    (0..nonzero)
        .map(|l| {
            let scattered = complex_gaussian(rng, 1.0);
            let tap = if l == 0 { los * rician.sqrt() + scattered } else { scattered };
            tap * scale
        })
        .collect()
}

struct LinkParams {
    delay: usize,
    amplitude: f64,
    bulk_phase: f64,
    el: f64,
    az: f64,
    rician: f64,
    nonzero: usize,
}

fn link_params(
    link: Link,
    k: usize,
    geometry: &Geometry,
    fading: &FadingConfig,
    angles: &LinkAngles,
) -> Result<LinkParams> {
    let (dist, alpha, el, az, rician, nonzero) = match link {
        Link::BsRis => (
            geometry.bs_ris_distance(k),
            fading.alpha_br,
            angles.aoa_el,
            angles.aoa_az,
            fading.rician_br[k],
            fading.nonzero_taps_br[k],
        ),
        Link::RisUe => (
            geometry.ris_ue_distance(k),
            fading.alpha_ru,
            angles.aod_el,
            angles.aod_az,
            fading.rician_ru[k],
            fading.nonzero_taps_ru[k],
        ),
    };
    Ok(LinkParams {
        delay: propagation_delay_taps(dist, fading.sampling_rate),
        amplitude: path_gain(fading.c0, dist, alpha)?.sqrt(),
        bulk_phase: -2.0 * PI * dist / geometry.wavelength,
        el,
        az,
        rician,
        nonzero,
    })
}

impl LinkParams {
    fn los_phase(&self, geometry: &Geometry, m: usize) -> f64 {
        let (m_x, m_z) = geometry.element_coords(m);
        self.bulk_phase + los_phase_offset(m_x, m_z, self.el, self.az, geometry.element_spacing, geometry.wavelength)
    }

    fn draw<R: Rng + ?Sized>(&self, geometry: &Geometry, m: usize, rng: &mut R) -> TapVector {
        let mut taps = rician_taps(self.rician, self.nonzero, self.los_phase(geometry, m), rng);
        for t in &mut taps {
            *t *= self.amplitude;
        }
        TapVector::new(self.delay, taps)
    }
}

/// Draws the CIR of one hop (BS→element or element→UE) of element `m` at
/// RIS `k`, in absolute propagation time.
pub fn generate_link_cir<R: Rng + ?Sized>(
    link: Link,
    k: usize,
    m: usize,
    geometry: &Geometry,
    fading: &FadingConfig,
    rng: &mut R,
) -> Result<TapVector> {
    geometry.validate()?;
    fading.validate(geometry.num_ris())?;
    let angles = link_angles(geometry, k)?;
    Ok(link_params(link, k, geometry, fading, &angles)?.draw(geometry, m, rng))
}

/// Deterministic LoS structure of one RIS, known from geometry alone.
#[derive(Debug, Clone, PartialEq)]
pub struct LosInfo {
    /// Tap index of the cascaded LoS ray in the channel set's timing frame.
    pub tap_index: usize,
    /// Cascaded LoS phase per element.
    pub phase: Vec<f64>,
}

/// Cascaded channels `h[k][m]` of every reflecting element.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedChannelSet {
    channels: Vec<Vec<TapVector>>,
    los: Option<Vec<LosInfo>>,
    ris_order: Vec<usize>,
}

impl ReflectedChannelSet {
    /// Wraps explicit channels. Every RIS must have the same element count.
    pub fn from_channels(channels: Vec<Vec<TapVector>>) -> Result<Self> {
        Self::build(channels, None)
    }

    fn build(channels: Vec<Vec<TapVector>>, los: Option<Vec<LosInfo>>) -> Result<Self> {
        let m = channels.first().map(Vec::len).unwrap_or(0);
        if m == 0 || channels.iter().any(|c| c.len() != m) {
            return Err(Error::InvalidScenario(
                "channel set needs the same non-zero element count at every RIS".into(),
            ));
        }
        let spans: Vec<usize> = channels.iter().map(|c| c.iter().map(TapVector::span).max().unwrap_or(0)).collect();
        let mut ris_order: Vec<usize> = (0..channels.len()).collect();
        ris_order.sort_by_key(|&k| spans[k]);
        Ok(Self { channels, los, ris_order })
    }

    /// Draws a full channel set for the given geometry.
    ///
    /// The common propagation delay shared by all reflected paths is removed
    /// so the earliest cascaded tap sits at index 0.
    pub fn generate<R: Rng + ?Sized>(geometry: &Geometry, fading: &FadingConfig, rng: &mut R) -> Result<Self> {
        geometry.validate()?;
        fading.validate(geometry.num_ris())?;
        let m_count = geometry.elements_per_ris();
        let mut channels = Vec::with_capacity(geometry.num_ris());
        let mut los = Vec::with_capacity(geometry.num_ris());
        for k in 0..geometry.num_ris() {
            let angles = link_angles(geometry, k)?;
            let br = link_params(Link::BsRis, k, geometry, fading, &angles)?;
            let ru = link_params(Link::RisUe, k, geometry, fading, &angles)?;
            let mut ris = Vec::with_capacity(m_count);
            let mut phase = Vec::with_capacity(m_count);
            for m in 0..m_count {
                let u = br.draw(geometry, m, rng);
                let v = ru.draw(geometry, m, rng);
                ris.push(cascade(&u, &v));
                phase.push(br.los_phase(geometry, m) + ru.los_phase(geometry, m));
            }
            channels.push(ris);
            los.push(LosInfo { tap_index: br.delay + ru.delay, phase });
        }

        let offset = channels.iter().flatten().map(|h| h.first_tap_index).min().unwrap_or(0);
        for h in channels.iter_mut().flatten() {
            h.first_tap_index -= offset;
        }
        for info in &mut los {
            info.tap_index -= offset;
        }
        Self::build(channels, Some(los))
    }

    pub fn num_ris(&self) -> usize {
        self.channels.len()
    }

    pub fn elements_per_ris(&self) -> usize {
        self.channels[0].len()
    }

    pub fn num_elements(&self) -> usize {
        self.num_ris() * self.elements_per_ris()
    }

    pub fn channel(&self, k: usize, m: usize) -> &TapVector {
        &self.channels[k][m]
    }

    pub fn ris(&self, k: usize) -> &[TapVector] {
        &self.channels[k]
    }

    /// Iterates `(k, m, h)` in RIS-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &TapVector)> {
        self.channels.iter().enumerate().flat_map(|(k, ris)| ris.iter().enumerate().map(move |(m, h)| (k, m, h)))
    }

    /// Channel span `L_k` of RIS `k`: the longest span among its elements.
    pub fn span(&self, k: usize) -> usize {
        self.channels[k].iter().map(TapVector::span).max().unwrap_or(0)
    }

    pub fn max_span(&self) -> usize {
        (0..self.num_ris()).map(|k| self.span(k)).max().unwrap_or(0)
    }

    /// RIS indices sorted by non-decreasing span (stable).
    pub fn ris_order(&self) -> &[usize] {
        &self.ris_order
    }

    /// Geometry-derived LoS structure, present for generated sets.
    pub fn los(&self) -> Option<&[LosInfo]> {
        self.los.as_deref()
    }

    pub fn total_power(&self) -> f64 {
        self.iter().map(|(_, _, h)| h.power()).sum()
    }

    /// Returns a copy with each tap mapped through `f(k, m, l, tap)`.
    pub(crate) fn map_taps(&self, mut f: impl FnMut(usize, usize, usize, Complex64) -> Complex64) -> Self {
        let channels = self
            .channels
            .iter()
            .enumerate()
            .map(|(k, ris)| {
                ris.iter()
                    .enumerate()
                    .map(|(m, h)| {
                        let taps = h.taps.iter().enumerate().map(|(i, &t)| f(k, m, h.first_tap_index + i, t)).collect();
                        TapVector::new(h.first_tap_index, taps)
                    })
                    .collect()
            })
            .collect();
        Self { channels, los: self.los.clone(), ris_order: self.ris_order.clone() }
    }
}

/// Adds i.i.d. `CN(0, error_var)` estimation noise to every stored tap.
pub fn corrupt_csi<R: Rng + ?Sized>(
    channels: &ReflectedChannelSet,
    error_var: f64,
    rng: &mut R,
) -> Result<ReflectedChannelSet> {
    if !(error_var >= 0.0) || !error_var.is_finite() {
        return Err(Error::InvalidScenario(format!("CSI error variance {error_var} must be >= 0")));
    }
    if error_var == 0.0 {
        return Ok(channels.clone());
    }
    Ok(channels.map_taps(|_, _, _, t| t + complex_gaussian(rng, error_var)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn layout(d_bu_x: f64) -> Geometry {
        Geometry {
            bs_pos: [0.0, 0.0, 10.0],
            ue_pos: [d_bu_x, 0.0, 0.0],
            ris_ref_pos: (1..=3).map(|k| [100.0, -20.0 * k as f64, 10.0]).collect(),
            element_spacing: 0.05,
            wavelength: 0.33,
            grid: (10, 2),
        }
    }

    fn fading(rician_ru: f64) -> FadingConfig {
        FadingConfig {
            c0: 1e-3,
            alpha_br: 2.2,
            alpha_ru: 2.8,
            rician_br: vec![f64::INFINITY; 3],
            rician_ru: vec![rician_ru; 3],
            sampling_rate: 50e6,
            nonzero_taps_br: vec![1; 3],
            nonzero_taps_ru: vec![5; 3],
        }
    }

    #[test]
    fn los_phase_reference_and_half_wavelength() {
        assert_eq!(los_phase_offset(1, 1, 0.3, 1.2, 0.05, 0.33), 0.0);
        let p = los_phase_offset(2, 1, 0.0, 0.0, 0.5, 1.0);
        assert!((p - PI).abs() < 1e-15);
    }

    #[test]
    fn los_phase_matches_scalar_rederivation() {
        let g = layout(100.0);
        let a = link_angles(&g, 0).unwrap();
        // BS→RIS arrival at k=1: el = 0, az = atan(20/100); (m_x, m_z) = (3, 2).
        let az = (20.0f64 / 100.0).atan();
        let expected = 2.0 * PI / 0.33 * 2.0 * 0.05 * az.cos();
        let got = los_phase_offset(3, 2, a.aoa_el, a.aoa_az, 0.05, 0.33);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn angles_of_standard_layout() {
        let g = layout(100.0);
        let a = link_angles(&g, 0).unwrap();
        assert!(a.aoa_el.abs() < 1e-15);
        assert!((a.aoa_az - 0.2f64.atan()).abs() < 1e-15);
        // UE at the same x as the RIS plane: departure azimuth is π/2.
        assert!((a.aod_az - PI / 2.0).abs() < 1e-15);
        let r = (0.0f64.powi(2) + 20.0f64.powi(2)).sqrt();
        assert!((a.aod_el + (10.0 / r).atan()).abs() < 1e-15);

        let g = layout(170.0);
        for k in 0..3 {
            let a = link_angles(&g, k).unwrap();
            let dy = 20.0 * (k + 1) as f64;
            let dx = 70.0;
            assert!((a.aod_az - (PI / 2.0 + (dx / dy).atan())).abs() < 1e-12);
            assert!((a.aod_el + (10.0 / dx.hypot(dy)).atan()).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        let mut g = layout(100.0);
        g.ue_pos = [100.0, -20.0, 0.0];
        assert!(matches!(link_angles(&g, 0), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn path_gain_reference_and_errors() {
        assert_eq!(path_gain(1e-3, 1.0, 2.2).unwrap(), 1e-3);
        assert_eq!(path_gain(0.7, 1.0, 3.1).unwrap(), 0.7);
        let expected = 1e-3 * 100f64.powf(-2.2);
        assert!((path_gain(1e-3, 100.0, 2.2).unwrap() - expected).abs() <= 1e-18);
        assert!(path_gain(1e-3, 0.0, 2.2).is_err());
        assert!(path_gain(1e-3, -1.0, 2.2).is_err());
    }

    #[test]
    fn pure_los_link_is_single_tap() {
        let g = layout(100.0);
        let f = fading(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = generate_link_cir(Link::BsRis, 1, 4, &g, &f, &mut rng).unwrap();
        assert_eq!(u.len(), 1);
        let pg = path_gain(1e-3, g.bs_ris_distance(1), 2.2).unwrap();
        assert!((u.taps[0].norm() - pg.sqrt()).abs() < 1e-15);
        assert_eq!(u.first_tap_index, propagation_delay_taps(g.bs_ris_distance(1), 50e6));
    }

    #[test]
    fn rayleigh_link_has_no_los_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // With ζ = 0 the first tap is purely scattered: its mean vanishes.
        let mean: Complex64 = (0..20000).map(|_| rician_taps(0.0, 3, 0.7, &mut rng)[0]).sum::<Complex64>() / 20000.0;
        assert!(mean.norm() < 0.02);
    }

    #[test]
    fn rician_block_has_unit_mean_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 100_000;
        let total: f64 =
            (0..trials).map(|_| rician_taps(2.0, 5, 1.3, &mut rng).iter().map(|t| t.norm_sqr()).sum::<f64>()).sum();
        let mean = total / trials as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean power {mean}");
    }

    #[test]
    fn link_mean_power_equals_path_gain() {
        let g = layout(100.0);
        let f = fading(2.0);
        let pg = path_gain(1e-3, g.ris_ue_distance(2), 2.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 100_000;
        let mut total = 0.0;
        for _ in 0..trials {
            total += generate_link_cir(Link::RisUe, 2, 0, &g, &f, &mut rng).unwrap().power();
        }
        let ratio = total / trials as f64 / pg;
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn cascade_identity_and_scaling() {
        let v = TapVector::new(2, vec![c(1.0, 2.0), c(-0.5, 0.1)]);
        let id = TapVector::impulse(0, c(1.0, 0.0));
        assert_eq!(cascade(&id, &v), v);
        let u = TapVector::new(0, vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let w = TapVector::new(0, vec![c(2.0, 0.0)]);
        assert_eq!(cascade(&u, &w).taps, vec![c(2.0, 0.0), c(0.0, 2.0)]);
    }

    #[test]
    fn cascade_matches_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = TapVector::new(1, (0..3).map(|_| complex_gaussian(&mut rng, 1.0)).collect());
        let v = TapVector::new(4, (0..5).map(|_| complex_gaussian(&mut rng, 1.0)).collect());
        let h = cascade(&u, &v);
        assert_eq!(h.first_tap_index, 5);
        assert_eq!(h.len(), 7);
        for n in 0..16 {
            let mut acc = Complex64::default();
            for a in 0..16 {
                if a <= n {
                    acc += u.get(a) * v.get(n - a);
                }
            }
            assert!((h.get(n) - acc).norm() < 1e-15);
        }
    }

    #[test]
    fn generated_set_is_synchronized_and_consistent() {
        let g = layout(100.0);
        let f = fading(2.0);
        let set = ReflectedChannelSet::generate(&g, &f, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
        assert_eq!(set.num_ris(), 3);
        assert_eq!(set.elements_per_ris(), 20);
        assert_eq!(set.iter().map(|(_, _, h)| h.first_tap_index).min(), Some(0));
        let los = set.los().unwrap();
        for k in 0..3 {
            for h in set.ris(k) {
                // L_k = L_BR + L_RU - 1 on the non-zero block.
                assert_eq!(h.len(), 1 + 5 - 1);
                assert_eq!(h.first_tap_index, los[k].tap_index);
            }
        }
        // Nearer RISs arrive first, so the canonical order is the identity here.
        assert_eq!(set.ris_order(), &[0, 1, 2]);
        assert!(set.max_span() <= 16);
    }

    #[test]
    fn los_tap_phase_differences_follow_geometry() {
        let g = layout(140.0);
        let f = fading(f64::INFINITY);
        let set = ReflectedChannelSet::generate(&g, &f, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let los = set.los().unwrap();
        let k = 1;
        let a = link_angles(&g, k).unwrap();
        for (m1, m2) in [(0, 7), (3, 15), (12, 19)] {
            let h1 = set.channel(k, m1).taps[0];
            let h2 = set.channel(k, m2).taps[0];
            let (x1, z1) = g.element_coords(m1);
            let (x2, z2) = g.element_coords(m2);
            let off = |x, z| {
                los_phase_offset(x, z, a.aoa_el, a.aoa_az, 0.05, 0.33)
                    + los_phase_offset(x, z, a.aod_el, a.aod_az, 0.05, 0.33)
            };
            let expected = off(x2, z2) - off(x1, z1);
            let measured = (h2 / h1).arg();
            let diff = (measured - expected).rem_euclid(2.0 * PI);
            assert!(diff.min(2.0 * PI - diff) < 1e-9);
            let recorded = los[k].phase[m2] - los[k].phase[m1];
            assert!((recorded - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let g = layout(120.0);
        let f = fading(2.0);
        let a = ReflectedChannelSet::generate(&g, &f, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = ReflectedChannelSet::generate(&g, &f, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupt_csi_zero_is_identity_and_variance_matches() {
        let g = layout(100.0);
        let f = fading(2.0);
        let set = ReflectedChannelSet::generate(&g, &f, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(corrupt_csi(&set, 0.0, &mut rng).unwrap(), set);
        assert!(corrupt_csi(&set, -1.0, &mut rng).is_err());

        let var = 2.5e-14;
        let mut sum = 0.0;
        let mut count = 0usize;
        for _ in 0..200 {
            let noisy = corrupt_csi(&set, var, &mut rng).unwrap();
            for ((_, _, a), (_, _, b)) in set.iter().zip(noisy.iter()) {
                for (x, y) in a.taps.iter().zip(&b.taps) {
                    sum += (x - y).norm_sqr();
                    count += 1;
                }
            }
        }
        let empirical = sum / count as f64;
        assert!((empirical / var - 1.0).abs() < 0.02, "{empirical} vs {var}");
    }

    #[test]
    fn csi_error_at_channel_power_gives_zero_db_tap_snr() {
        let g = layout(100.0);
        let f = fading(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut ratios = Vec::new();
        for _ in 0..200 {
            let set = ReflectedChannelSet::generate(&g, &f, &mut rng).unwrap();
            let taps: usize = set.iter().map(|(_, _, h)| h.len()).sum();
            let per_tap = set.total_power() / taps as f64;
            let noisy = corrupt_csi(&set, per_tap, &mut rng).unwrap();
            let err: f64 = set
                .iter()
                .zip(noisy.iter())
                .flat_map(|((_, _, a), (_, _, b))| a.taps.iter().zip(&b.taps).map(|(x, y)| (x - y).norm_sqr()))
                .sum();
            ratios.push(set.total_power() / err);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((10.0 * mean.log10()).abs() < 0.2, "mean tap SNR {mean}");
    }
}
