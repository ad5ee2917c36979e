//! Adversarial and reconstruction losses.
//!
//! Discriminator loss is the descent form of the minimax objective,
//! -[log D(x) + log(1 - D(G(z)))]; the generator trains on the
//! non-saturating form -log D(G(z)). Probabilities are clamped 1e-7 away
//! from {0, 1} before the logarithm. With per-patch discriminator maps the
//! same expressions apply with means taken over patches as well as the
//! batch.

use crate::error::{Error, Result};
use crate::nn::{Graph, Var};

/// Clamp distance from {0, 1} applied before logarithms.
pub const PROB_EPS: f64 = 1e-7;

/// Reject tensors that are not probabilities.
pub fn validate_probabilities(g: &Graph, v: Var, what: &str) -> Result<()> {
    if let Some(bad) = g.value(v).data().iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidConfig(format!(
            "{} contains non-probability {}",
            what, bad
        )));
    }
    Ok(())
}

/// -mean[log d_real] - mean[log(1 - d_fake)], scalar.
pub fn gan_discriminator_loss(g: &mut Graph, d_real: Var, d_fake: Var) -> Result<Var> {
    validate_probabilities(g, d_real, "d_real")?;
    validate_probabilities(g, d_fake, "d_fake")?;
    let real = g.clamp(d_real, PROB_EPS, 1.0 - PROB_EPS)?;
    let log_real = g.ln(real)?;
    let mean_real = g.mean(log_real)?;

    let neg_fake = g.scale(d_fake, -1.0)?;
    let one_minus = g.add_scalar(neg_fake, 1.0)?;
    let one_minus = g.clamp(one_minus, PROB_EPS, 1.0 - PROB_EPS)?;
    let log_fake = g.ln(one_minus)?;
    let mean_fake = g.mean(log_fake)?;

    let sum = g.add(mean_real, mean_fake)?;
    g.scale(sum, -1.0)
}

/// -mean[log d_fake], the non-saturating generator objective, scalar.
pub fn gan_generator_loss(g: &mut Graph, d_fake: Var) -> Result<Var> {
    validate_probabilities(g, d_fake, "d_fake")?;
    let fake = g.clamp(d_fake, PROB_EPS, 1.0 - PROB_EPS)?;
    let log_fake = g.ln(fake)?;
    let mean = g.mean(log_fake)?;
    g.scale(mean, -1.0)
}

/// mean |a - b|, scalar.
pub fn l1_loss(g: &mut Graph, a: Var, b: Var) -> Result<Var> {
    let diff = g.sub(a, b)?;
    let abs = g.abs(diff)?;
    g.mean(abs)
}

/// Plain adversarial losses for the latent generator: (loss_d, loss_g).
pub fn lfg_gan_loss(g: &mut Graph, d_real: Var, d_fake: Var) -> Result<(Var, Var)> {
    let loss_d = gan_discriminator_loss(g, d_real, d_fake)?;
    let loss_g = gan_generator_loss(g, d_fake)?;
    Ok((loss_d, loss_g))
}

/// Conditional-generator losses: the discriminator term as in the plain
/// adversarial case but over patch maps, and the generator term with the
/// weighted L1 reconstruction added. Returns (loss_d, loss_g).
pub fn hfg_loss(
    g: &mut Graph,
    d_pair_real: Var,
    d_pair_fake: Var,
    x_hf: Var,
    g_out: Var,
    l1_weight: f64,
) -> Result<(Var, Var)> {
    let loss_d = gan_discriminator_loss(g, d_pair_real, d_pair_fake)?;
    let adv = gan_generator_loss(g, d_pair_fake)?;
    let l1 = l1_loss(g, x_hf, g_out)?;
    let weighted = g.scale(l1, l1_weight)?;
    let loss_g = g.add(adv, weighted)?;
    Ok((loss_d, loss_g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    #[test]
    fn half_half_gives_two_ln_two() {
        let mut g = Graph::new();
        let d_real = g.leaf(Tensor::full(&[4, 1], 0.5), false);
        let d_fake = g.leaf(Tensor::full(&[4, 1], 0.5), false);
        let (loss_d, loss_g) = lfg_gan_loss(&mut g, d_real, d_fake).unwrap();
        assert!((g.value(loss_d).item() - 2.0 * 2.0_f64.ln()).abs() < 1e-12);
        assert!((g.value(loss_g).item() - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perfect_discriminator_loss_vanishes() {
        let mut g = Graph::new();
        let d_real = g.leaf(Tensor::full(&[2, 1], 1.0 - 1e-9), false);
        let d_fake = g.leaf(Tensor::full(&[2, 1], 1e-9), false);
        let loss = gan_discriminator_loss(&mut g, d_real, d_fake).unwrap();
        assert!(g.value(loss).item() < 1e-6, "loss {}", g.value(loss).item());
    }

    #[test]
    fn patch_maps_reduce_like_scalars() {
        // all-0.5 patch maps give the same losses as the scalar case
        let mut g = Graph::new();
        let d_real = g.leaf(Tensor::full(&[2, 1, 4, 4, 4], 0.5), false);
        let d_fake = g.leaf(Tensor::full(&[2, 1, 4, 4, 4], 0.5), false);
        let loss_d = gan_discriminator_loss(&mut g, d_real, d_fake).unwrap();
        let loss_g = gan_generator_loss(&mut g, d_fake).unwrap();
        assert!((g.value(loss_d).item() - 2.0 * 2.0_f64.ln()).abs() < 1e-12);
        assert!((g.value(loss_g).item() - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn l1_matches_hand_values() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::full(&[8], 0.75), false);
        let b = g.leaf(Tensor::full(&[8], 0.25), false);
        let l = l1_loss(&mut g, a, b).unwrap();
        assert!((g.value(l).item() - 0.5).abs() < 1e-12);
        let same = l1_loss(&mut g, a, a).unwrap();
        assert_eq!(g.value(same).item(), 0.0);
    }

    #[test]
    fn conditional_loss_composes_terms() {
        let mut g = Graph::new();
        let d_real = g.leaf(Tensor::full(&[2, 1, 2, 2, 2], 0.5), false);
        let d_fake = g.leaf(Tensor::full(&[2, 1, 2, 2, 2], 0.5), false);
        let x_hf = g.leaf(Tensor::full(&[2, 1, 4, 4, 4], 0.25), false);
        // perfect reconstruction: generator loss is the adversarial term
        let (ld, lg) = hfg_loss(&mut g, d_real, d_fake, x_hf, x_hf, 100.0).unwrap();
        assert!((g.value(ld).item() - 2.0 * 2.0_f64.ln()).abs() < 1e-12);
        assert!((g.value(lg).item() - 2.0_f64.ln()).abs() < 1e-12);
        // constant 0.5 offset adds 0.5 * weight to the generator loss
        let off = g.leaf(Tensor::full(&[2, 1, 4, 4, 4], 0.75), false);
        let (_, lg2) = hfg_loss(&mut g, d_real, d_fake, x_hf, off, 100.0).unwrap();
        let expected = 2.0_f64.ln() + 0.5 * 100.0;
        assert!((g.value(lg2).item() - expected).abs() < 1e-10);
    }

    #[test]
    fn out_of_range_probabilities_rejected() {
        let mut g = Graph::new();
        let bad = g.leaf(Tensor::full(&[2], 1.5), false);
        let ok = g.leaf(Tensor::full(&[2], 0.5), false);
        assert!(gan_discriminator_loss(&mut g, bad, ok).is_err());
        assert!(gan_generator_loss(&mut g, bad).is_err());
    }
}
