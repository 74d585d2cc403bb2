use serde::{Deserialize, Serialize};

use crate::error::SurrogateError;

pub const POSITION_DIM: usize = 3;
pub const CYCLE_DIM: usize = 1;
pub const OUTPUT_DIM: usize = 3;

/// Layer widths of the two-branch encoder and the decoder.
///
/// The position branch and the cycle branch each end in a layer of the same
/// width; their outputs are concatenated and fed to the decoder, which is
/// followed by a final affine layer to the 3-component output. `width_scale`
/// multiplies every hidden width (rounded, at least 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub branch_position: Vec<usize>,
    pub branch_cycle: Vec<usize>,
    pub decoder: Vec<usize>,
    pub width_scale: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            branch_position: vec![64, 128, 256, 512],
            branch_cycle: vec![16, 32, 64, 128, 256, 512],
            decoder: vec![512, 256, 128, 64],
            width_scale: 1.0,
        }
    }
}

/// Shape of one fully connected layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Hidden layers are normalized and rectified; the output layer is not.
    pub hidden: bool,
}

impl LayerShape {
    pub fn param_count(&self) -> usize {
        let norm = if self.hidden { 2 * self.fan_out } else { 0 };
        self.fan_out * self.fan_in + self.fan_out + norm
    }
}

impl Architecture {
    pub fn scaled(width_scale: f64) -> Self {
        Self { width_scale, ..Self::default() }
    }

    fn scale(&self, widths: &[usize]) -> Vec<usize> {
        widths
            .iter()
            .map(|&w| ((w as f64 * self.width_scale).round() as usize).max(1))
            .collect()
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        if !(self.width_scale.is_finite() && self.width_scale > 0.0) {
            return Err(SurrogateError::Architecture(format!(
                "width_scale must be positive, got {}",
                self.width_scale
            )));
        }
        if self.branch_position.is_empty() || self.branch_cycle.is_empty() {
            return Err(SurrogateError::Architecture("encoder branches need at least one layer".into()));
        }
        let all = self.branch_position.iter().chain(&self.branch_cycle).chain(&self.decoder);
        if all.into_iter().any(|&w| w == 0) {
            return Err(SurrogateError::Architecture("layer widths must be at least 1".into()));
        }
        let a = self.position_widths();
        let b = self.cycle_widths();
        if a.last() != b.last() {
            return Err(SurrogateError::Architecture(format!(
                "encoder branches end in different widths ({:?} vs {:?})",
                a.last(),
                b.last()
            )));
        }
        Ok(())
    }

    pub fn position_widths(&self) -> Vec<usize> {
        self.scale(&self.branch_position)
    }

    pub fn cycle_widths(&self) -> Vec<usize> {
        self.scale(&self.branch_cycle)
    }

    pub fn decoder_widths(&self) -> Vec<usize> {
        self.scale(&self.decoder)
    }

    /// Width of one encoder branch's output.
    pub fn latent_width(&self) -> usize {
        *self.position_widths().last().unwrap_or(&0)
    }

    fn chain(input: usize, widths: &[usize]) -> Vec<LayerShape> {
        let mut fan_in = input;
        widths
            .iter()
            .map(|&fan_out| {
                let shape = LayerShape { fan_in, fan_out, hidden: true };
                fan_in = fan_out;
                shape
            })
            .collect()
    }

    pub fn position_layers(&self) -> Vec<LayerShape> {
        Self::chain(POSITION_DIM, &self.position_widths())
    }

    pub fn cycle_layers(&self) -> Vec<LayerShape> {
        Self::chain(CYCLE_DIM, &self.cycle_widths())
    }

    /// Decoder hidden layers followed by the output layer.
    pub fn decoder_layers(&self) -> Vec<LayerShape> {
        let mut layers = Self::chain(2 * self.latent_width(), &self.decoder_widths());
        let last = layers.last().map_or(2 * self.latent_width(), |l| l.fan_out);
        layers.push(LayerShape { fan_in: last, fan_out: OUTPUT_DIM, hidden: false });
        layers
    }

    pub fn param_count(&self) -> usize {
        self.position_layers()
            .iter()
            .chain(&self.cycle_layers())
            .chain(&self.decoder_layers())
            .map(LayerShape::param_count)
            .sum()
    }
}
