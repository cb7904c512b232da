use crate::error::{Error, Result};

/// Model shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    /// Model width.
    pub d: usize,
    pub n_heads: usize,
    /// Window length L.
    pub seq_len: usize,
    /// Hidden width of the encoder feed-forward layer.
    pub d_ff: usize,
    /// Width of each of the five input embeddings.
    pub d_e: usize,
    /// Number of distinct question ids (the embedding table has one more row).
    pub n_questions: usize,
}

impl ModelConfig {
    /// Desk-scale default: d=32, 2 heads, L=128, d_ff=128.
    pub fn desk(n_questions: usize) -> Self {
        Self {
            d: 32,
            n_heads: 2,
            seq_len: 128,
            d_ff: 128,
            d_e: 32,
            n_questions,
        }
    }

    /// Competition-scale shape: d=128, L=1728, one of 2/4/8/16/32 heads.
    pub fn full_scale(n_heads: usize, n_questions: usize) -> Self {
        Self {
            d: 128,
            n_heads,
            seq_len: 1728,
            d_ff: 512,
            d_e: 128,
            n_questions,
        }
    }

    /// Gradient-check size: d=8, L=6.
    pub fn tiny() -> Self {
        Self {
            d: 8,
            n_heads: 2,
            seq_len: 6,
            d_ff: 32,
            d_e: 8,
            n_questions: 10,
        }
    }

    pub fn d_k(&self) -> usize {
        self.d / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d_ff == 0 || self.d_e == 0 {
            return Err(Error::Config("widths must be positive".into()));
        }
        if self.n_heads == 0 || !self.d.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d={} is not divisible by n_heads={}",
                self.d, self.n_heads
            )));
        }
        if self.seq_len == 0 {
            return Err(Error::Config("sequence length must be at least 1".into()));
        }
        if self.n_questions == 0 {
            return Err(Error::Config("n_questions must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        ModelConfig::desk(100).validate().unwrap();
        ModelConfig::tiny().validate().unwrap();
        for h in [2, 4, 8, 16, 32] {
            let c = ModelConfig::full_scale(h, 13523);
            c.validate().unwrap();
            assert_eq!(c.d_k() * h, 128);
        }
    }

    #[test]
    fn indivisible_heads_rejected() {
        let c = ModelConfig {
            n_heads: 3,
            ..ModelConfig::desk(10)
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
