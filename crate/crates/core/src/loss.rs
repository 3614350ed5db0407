//! Weighted total training objective with a gated structural term.

use crate::error::{Error, Result};
use crate::kvconfig::KvConfig;

/// Scalar loss terms supplied by a trainer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossComponents {
    pub gan: f64,
    pub cyc: f64,
    pub excyc: f64,
    pub dir: f64,
    pub iden_d: f64,
    /// Phase congruency loss, in `[0, 1]`.
    pub pc: f64,
    /// Normal consistency loss, in `[0, 2]`.
    pub normal: f64,
}

impl LossComponents {
    pub const FIELDS: [&'static str; 7] = ["gan", "cyc", "excyc", "dir", "iden_d", "pc", "normal"];

    pub fn from_values(v: [f64; 7]) -> Self {
        Self {
            gan: v[0],
            cyc: v[1],
            excyc: v[2],
            dir: v[3],
            iden_d: v[4],
            pc: v[5],
            normal: v[6],
        }
    }

    pub fn values(&self) -> [f64; 7] {
        [self.gan, self.cyc, self.excyc, self.dir, self.iden_d, self.pc, self.normal]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::FIELDS.iter().zip(self.values()) {
            if !v.is_finite() {
                return Err(Error::arg(format!("loss component {name} is not finite")));
            }
        }
        if !(0.0..=1.0).contains(&self.pc) {
            return Err(Error::Domain(format!("pc loss {} outside [0, 1]", self.pc)));
        }
        if !(0.0..=2.0).contains(&self.normal) {
            return Err(Error::Domain(format!("normal loss {} outside [0, 2]", self.normal)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Adversarial weight.
    pub alpha: f64,
    /// Shared by the cycle and extended-cycle terms.
    pub beta: f64,
    /// Shared by the depth identity and phase congruency terms.
    pub gamma: f64,
    /// Normal consistency weight.
    pub lambda: f64,
    /// First epoch (0-based, inclusive) at which the PC term is active.
    pub pc_start_epoch: u64,
}

impl Default for LossWeights {
    fn default() -> Self {
        default_weights()
    }
}

pub fn default_weights() -> LossWeights {
    LossWeights {
        alpha: 0.5,
        beta: 10.0,
        gamma: 5.0,
        lambda: 2.4,
        pc_start_epoch: 160,
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("weight {name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Reads `alpha`, `beta`, `gamma`, `lambda`, `pc_start_epoch`.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let d = default_weights();
        let w = Self {
            alpha: cfg.get("alpha")?.unwrap_or(d.alpha),
            beta: cfg.get("beta")?.unwrap_or(d.beta),
            gamma: cfg.get("gamma")?.unwrap_or(d.gamma),
            lambda: cfg.get("lambda")?.unwrap_or(d.lambda),
            pc_start_epoch: cfg.get("pc_start_epoch")?.unwrap_or(d.pc_start_epoch),
        };
        w.validate()?;
        Ok(w)
    }

    pub fn write_kv(&self, cfg: &mut KvConfig) {
        cfg.set("alpha", self.alpha);
        cfg.set("beta", self.beta);
        cfg.set("gamma", self.gamma);
        cfg.set("lambda", self.lambda);
        cfg.set("pc_start_epoch", self.pc_start_epoch);
    }

    pub fn pc_active(&self, epoch: u64) -> bool {
        epoch >= self.pc_start_epoch
    }
}

/// `α·gan + β·(cyc + excyc) + dir + γ·iden_d + [epoch ≥ start]·γ·pc + λ·normal`.
pub fn total_loss(c: &LossComponents, w: &LossWeights, epoch: u64) -> Result<f64> {
    c.validate()?;
    w.validate()?;
    let mut total = w.alpha * c.gan + w.beta * c.cyc + w.beta * c.excyc + c.dir + w.gamma * c.iden_d;
    if w.pc_active(epoch) {
        total += w.gamma * c.pc;
    }
    total += w.lambda * c.normal;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults() {
        let w = default_weights();
        assert_eq!(w.alpha, 0.5);
        assert_eq!(w.beta, 10.0);
        assert_eq!(w.gamma, 5.0);
        assert_eq!(w.lambda, 2.4);
        assert_eq!(w.pc_start_epoch, 160);
    }

    #[test]
    fn worked_totals() {
        let w = default_weights();
        let ones = LossComponents::from_values([1.0; 7]);
        assert!((total_loss(&ones, &w, 200).unwrap() - 33.9).abs() < 1e-12);
        assert!((total_loss(&ones, &w, 160).unwrap() - 33.9).abs() < 1e-12);
        assert!((total_loss(&ones, &w, 159).unwrap() - 28.9).abs() < 1e-12);
        assert!((total_loss(&ones, &w, 100).unwrap() - 28.9).abs() < 1e-12);
        assert_eq!(total_loss(&LossComponents::default(), &w, 7).unwrap(), 0.0);
    }

    #[test]
    fn zero_weights_leave_dir() {
        let w = LossWeights {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            lambda: 0.0,
            pc_start_epoch: 0,
        };
        let c = LossComponents::from_values([3.0, 4.0, 5.0, 1.25, 6.0, 0.5, 1.5]);
        assert_eq!(total_loss(&c, &w, 500).unwrap(), 1.25);
    }

    #[test]
    fn invalid_inputs() {
        let w = default_weights();
        let mut c = LossComponents::default();
        c.gan = f64::NAN;
        assert!(matches!(total_loss(&c, &w, 0), Err(Error::Argument(_))));
        let c = LossComponents { pc: 1.5, ..Default::default() };
        assert!(total_loss(&c, &w, 0).is_err());
        let bad = LossWeights { beta: -1.0, ..w };
        assert!(total_loss(&LossComponents::default(), &bad, 0).is_err());
    }

    #[test]
    fn kv_round_trip() {
        let w = LossWeights { alpha: 1.5, beta: 2.0, gamma: 0.25, lambda: 9.0, pc_start_epoch: 3 };
        let mut cfg = KvConfig::new();
        w.write_kv(&mut cfg);
        assert_eq!(LossWeights::from_kv(&cfg).unwrap(), w);
    }

    fn components() -> impl Strategy<Value = LossComponents> {
        (
            proptest::array::uniform5(-50.0f64..50.0),
            0.0f64..=1.0,
            0.0f64..=2.0,
        )
            .prop_map(|(v, pc, n)| LossComponents::from_values([v[0], v[1], v[2], v[3], v[4], pc, n]))
    }

    proptest! {
        #[test]
        fn gated_total_ignores_pc(c in components(), pc in 0.0f64..=1.0, epoch in 0u64..160) {
            let w = default_weights();
            let other = LossComponents { pc, ..c };
            prop_assert_eq!(total_loss(&c, &w, epoch).unwrap(), total_loss(&other, &w, epoch).unwrap());
        }
    }
}
