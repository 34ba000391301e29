//! Unit-energy constellations with fixed Gray labelings.
//!
//! Points are stored in label order: `points[i]` carries the bit label whose
//! big-endian integer value is `i`, so "lowest index" and "lowest label" are
//! the same thing.
//!
//! | id     | geometry                               | labeling                                   |
//! |--------|----------------------------------------|--------------------------------------------|
//! | QPSK   | `(±1 ± j)/√2`                          | bit 0 → sign of I, bit 1 → sign of Q (0 = +) |
//! | 8PSK   | `exp(j2πi/8)`                          | `gray(i)` going counter-clockwise from 1   |
//! | 16PSK  | `exp(j2πi/16)`                         | `gray(i)` going counter-clockwise from 1   |
//! | 16QAM  | `{±1, ±3}²/√10`                        | per-axis reflected Gray, I bits first      |
//! | 64QAM  | `{±1, ±3, ±5, ±7}²/√42`                | per-axis reflected Gray, I bits first      |
//!
//! Per-axis QAM levels run from the most positive amplitude down, so level
//! `i` has amplitude `(√M − 1) − 2i` and label `gray(i)`. QPSK is the `M = 4`
//! case of the same rule, which gives `00 → (1 + j)/√2`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{CMatrix, SymbolFrame, C64};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationId {
    Qpsk,
    Psk8,
    Qam16,
    Psk16,
    Qam64,
}

impl ConstellationId {
    pub const ALL: [ConstellationId; 5] = [
        ConstellationId::Qpsk,
        ConstellationId::Psk8,
        ConstellationId::Qam16,
        ConstellationId::Psk16,
        ConstellationId::Qam64,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConstellationId::Qpsk => "QPSK",
            ConstellationId::Psk8 => "8PSK",
            ConstellationId::Qam16 => "16QAM",
            ConstellationId::Psk16 => "16PSK",
            ConstellationId::Qam64 => "64QAM",
        }
    }

    pub fn is_constant_modulus(&self) -> bool {
        matches!(self, ConstellationId::Qpsk | ConstellationId::Psk8 | ConstellationId::Psk16)
    }
}

impl fmt::Display for ConstellationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstellationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '_'], "");
        match norm.as_str() {
            "QPSK" | "4QAM" | "4PSK" => Ok(ConstellationId::Qpsk),
            "8PSK" | "PSK8" => Ok(ConstellationId::Psk8),
            "16QAM" | "QAM16" => Ok(ConstellationId::Qam16),
            "16PSK" | "PSK16" => Ok(ConstellationId::Psk16),
            "64QAM" | "QAM64" => Ok(ConstellationId::Qam64),
            _ => Err(Error::UnknownId {
                kind: "constellation",
                id: s.to_string(),
            }),
        }
    }
}

pub fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    id: ConstellationId,
    points: Vec<C64>,
    bits_per_symbol: usize,
}

impl Constellation {
    pub fn new(id: ConstellationId) -> Self {
        match id {
            ConstellationId::Qpsk => square_qam(id, 4),
            ConstellationId::Qam16 => square_qam(id, 16),
            ConstellationId::Qam64 => square_qam(id, 64),
            ConstellationId::Psk8 => psk(id, 8),
            ConstellationId::Psk16 => psk(id, 16),
        }
    }

    pub fn id(&self) -> ConstellationId {
        self.id
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Average symbol energy; 1 for every built-in set.
    pub fn energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    pub fn label_bits(&self, index: usize) -> Vec<bool> {
        let m = self.bits_per_symbol;
        (0..m).map(|b| (index >> (m - 1 - b)) & 1 == 1).collect()
    }

    fn index_of_bits(&self, bits: &[bool]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn modulate(&self, bits: &[bool]) -> Result<Vec<C64>> {
        let m = self.bits_per_symbol;
        if bits.len() % m != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} bits do not split into {}-bit {} symbols",
                bits.len(),
                m,
                self.id
            )));
        }
        Ok(bits
            .chunks(m)
            .map(|chunk| self.points[self.index_of_bits(chunk)])
            .collect())
    }

    /// Minimum-distance detection; ties go to the lowest index.
    pub fn detect(&self, shat: C64) -> (usize, Vec<bool>) {
        let index = self.detect_index(shat);
        (index, self.label_bits(index))
    }

    pub fn detect_index(&self, shat: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (shat - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Number of bit positions where the labels of two points differ.
    pub fn label_distance(&self, a: usize, b: usize) -> u32 {
        (a ^ b).count_ones()
    }

    /// Uniform random bits for `U` users over `K` slots, modulated.
    ///
    /// With `pilot_slots > 0` the first columns are replaced by the pilot
    /// `√E_s = 1`; the bit rows keep their full length.
    pub fn random_frame(&self, num_ues: usize, num_slots: usize, pilot_slots: usize, seed: u64) -> SymbolFrame {
        let mut rng = rng::stream(seed);
        let m = self.bits_per_symbol;
        let bits: Vec<Vec<bool>> = (0..num_ues)
            .map(|_| (0..num_slots * m).map(|_| rng.random::<bool>()).collect())
            .collect();
        let mut s = CMatrix::zeros(num_ues, num_slots);
        for (u, row) in bits.iter().enumerate() {
            let syms = self.modulate(row).expect("row length is a multiple of m");
            for (k, z) in syms.into_iter().enumerate() {
                s[(u, k)] = if k < pilot_slots {
                    C64::new(self.energy().sqrt(), 0.0)
                } else {
                    z
                };
            }
        }
        SymbolFrame {
            s,
            bits,
            pilot_slots: pilot_slots.min(num_slots),
        }
    }
}

fn square_qam(id: ConstellationId, order: usize) -> Constellation {
    let side = (order as f64).sqrt() as usize;
    let half_bits = side.trailing_zeros() as usize;
    let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
    let mut points = vec![C64::new(0.0, 0.0); order];
    for i in 0..side {
        for q in 0..side {
            let amp = |lvl: usize| ((side - 1) as f64 - 2.0 * lvl as f64) * scale;
            let label = (gray(i) << half_bits) | gray(q);
            points[label] = C64::new(amp(i), amp(q));
        }
    }
    Constellation {
        id,
        points,
        bits_per_symbol: 2 * half_bits,
    }
}

fn psk(id: ConstellationId, order: usize) -> Constellation {
    let mut points = vec![C64::new(0.0, 0.0); order];
    for i in 0..order {
        let phase = 2.0 * std::f64::consts::PI * i as f64 / order as f64;
        points[gray(i)] = C64::from_polar(1.0, phase);
    }
    Constellation {
        id,
        points,
        bits_per_symbol: order.trailing_zeros() as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn all() -> Vec<Constellation> {
        ConstellationId::ALL.iter().map(|&id| Constellation::new(id)).collect()
    }

    #[test]
    fn unit_energy_everywhere() {
        for c in all() {
            assert!((c.energy() - 1.0).abs() < 1e-15, "{}: {}", c.id(), c.energy());
        }
    }

    #[test]
    fn qpsk_labeling() {
        let c = Constellation::new(ConstellationId::Qpsk);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = c.modulate(&[false, false, false, true, true, false, true, true]).unwrap();
        let expected = [C64::new(r, r), C64::new(r, -r), C64::new(-r, r), C64::new(-r, -r)];
        for (got, want) in s.iter().zip(expected) {
            assert!((got - want).norm() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn qam_scaling_constants() {
        let c16 = Constellation::new(ConstellationId::Qam16);
        let m16 = c16.points().iter().map(|p| p.re.abs()).fold(0.0, f64::max);
        assert!((m16 - 3.0 / 10f64.sqrt()).abs() < 1e-15);
        let c64 = Constellation::new(ConstellationId::Qam64);
        let m64 = c64.points().iter().map(|p| p.re.abs()).fold(0.0, f64::max);
        assert!((m64 - 7.0 / 42f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn modulate_rejects_ragged_input() {
        let c = Constellation::new(ConstellationId::Qam16);
        assert!(c.modulate(&[true, false, true]).is_err());
        assert!(c.modulate(&[]).unwrap().is_empty());
    }

    #[test]
    fn labels_are_a_bijection_and_roundtrip() {
        for c in all() {
            let mut seen = vec![false; c.order()];
            for idx in 0..c.order() {
                let bits = c.label_bits(idx);
                assert_eq!(bits.len(), c.bits_per_symbol());
                let sym = c.modulate(&bits).unwrap();
                let (det, back) = c.detect(sym[0]);
                assert_eq!(det, idx);
                assert_eq!(back, bits);
                seen[idx] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn psk_gray_adjacency() {
        for id in [ConstellationId::Qpsk, ConstellationId::Psk8, ConstellationId::Psk16] {
            let c = Constellation::new(id);
            let mut by_angle: Vec<usize> = (0..c.order()).collect();
            by_angle.sort_by(|&a, &b| {
                let ang = |i: usize| c.points()[i].arg().rem_euclid(std::f64::consts::TAU);
                ang(a).partial_cmp(&ang(b)).unwrap()
            });
            for w in 0..c.order() {
                let a = by_angle[w];
                let b = by_angle[(w + 1) % c.order()];
                assert_eq!(c.label_distance(a, b), 1, "{id}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn qam_gray_adjacency() {
        for id in [ConstellationId::Qpsk, ConstellationId::Qam16, ConstellationId::Qam64] {
            let c = Constellation::new(id);
            let side = (c.order() as f64).sqrt() as usize;
            let d = 2.0 / (2.0 * (c.order() as f64 - 1.0) / 3.0).sqrt();
            for a in 0..c.order() {
                for b in 0..c.order() {
                    let diff = c.points()[a] - c.points()[b];
                    let horizontal = (diff.re.abs() - d).abs() < 1e-12 && diff.im.abs() < 1e-12;
                    let vertical = (diff.im.abs() - d).abs() < 1e-12 && diff.re.abs() < 1e-12;
                    if horizontal || vertical {
                        assert_eq!(c.label_distance(a, b), 1, "{id}: {a} vs {b}");
                    }
                }
            }
            assert_eq!(side * side, c.order());
        }
    }

    #[test]
    fn detect_exact_point_and_tie_rule() {
        let c = Constellation::new(ConstellationId::Qam16);
        for (i, &p) in c.points().iter().enumerate() {
            assert_eq!(c.detect_index(p), i);
        }
        let q = Constellation::new(ConstellationId::Qpsk);
        assert_eq!(q.detect_index(C64::new(0.0, 0.0)), 0);
    }

    #[test]
    fn detect_matches_brute_scan() {
        let mut rng = rng::stream(77);
        for c in all() {
            for _ in 0..1000 {
                let z = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let dists: Vec<f64> = c.points().iter().map(|p| (z - p).norm()).collect();
                let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
                let expected = dists.iter().position(|&d| d == min).unwrap();
                assert_eq!(c.detect_index(z), expected);
            }
        }
    }

    #[test]
    fn pilot_frame_layout() {
        let c = Constellation::new(ConstellationId::Qam16);
        let f = c.random_frame(3, 5, 1, 9);
        assert_eq!(f.bits.len(), 3);
        assert!(f.bits.iter().all(|r| r.len() == 20));
        for u in 0..3 {
            assert_eq!(f.s[(u, 0)], C64::new(1.0, 0.0));
            for k in 1..5 {
                assert!(c.points().contains(&f.s[(u, k)]));
            }
        }
        assert_eq!(c.random_frame(3, 5, 0, 9).bits, f.bits);
    }

    #[test]
    fn parse_ids() {
        for id in ConstellationId::ALL {
            assert_eq!(id.as_str().parse::<ConstellationId>().unwrap(), id);
        }
        assert_eq!("16qam".parse::<ConstellationId>().unwrap(), ConstellationId::Qam16);
        assert!("32APSK".parse::<ConstellationId>().is_err());
    }

    proptest! {
        #[test]
        fn constant_modulus_detection_is_scale_free(
            re in -3.0f64..3.0, im in -3.0f64..3.0, alpha in 0.01f64..100.0, which in 0usize..3
        ) {
            let id = [ConstellationId::Qpsk, ConstellationId::Psk8, ConstellationId::Psk16][which];
            let c = Constellation::new(id);
            let z = C64::new(re, im);
            prop_assert_eq!(c.detect_index(z), c.detect_index(z * alpha));
        }
    }
}
