use serde::Serialize;

use super::Param;
use crate::error::Result;

/// A scalar objective of its own parameters.
pub trait Differentiable {
    fn params_mut(&mut self) -> Vec<&mut Param>;
    fn loss(&mut self) -> Result<f64>;
    /// Loss plus analytic gradients written into each parameter's `grad`.
    fn loss_and_grad(&mut self) -> Result<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub step: f64,
    /// Maximum entries probed per parameter block.
    pub samples_per_block: usize,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            samples_per_block: 24,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockError {
    pub name: String,
    pub max_rel_error: f64,
    pub checked: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockError>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max)
    }
}

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares analytic gradients with central differences on trainable blocks.
pub fn grad_check(model: &mut dyn Differentiable, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    for p in model.params_mut() {
        p.zero_grad();
    }
    model.loss_and_grad()?;
    let analytic: Vec<(String, bool, Vec<f64>)> = model
        .params_mut()
        .into_iter()
        .map(|p| (p.name.clone(), p.trainable(), p.grad.data().to_vec()))
        .collect();
    let mut blocks = Vec::new();
    for (bi, (name, trainable, grad)) in analytic.iter().enumerate() {
        if !trainable || grad.is_empty() {
            continue;
        }
        let n = grad.len();
        let stride = n.div_ceil(opts.samples_per_block.max(1)).max(1);
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for i in (0..n).step_by(stride) {
            let orig = model.params_mut()[bi].value.data()[i];
            model.params_mut()[bi].value.data_mut()[i] = orig + opts.step;
            let up = model.loss()?;
            model.params_mut()[bi].value.data_mut()[i] = orig - opts.step;
            let down = model.loss()?;
            model.params_mut()[bi].value.data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * opts.step);
            worst = worst.max(relative_error(grad[i], numeric));
            checked += 1;
        }
        blocks.push(BlockError {
            name: name.clone(),
            max_rel_error: worst,
            checked,
        });
    }
    Ok(GradCheckReport { blocks })
}
