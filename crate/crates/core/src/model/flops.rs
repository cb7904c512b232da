/// Which attention layout a multiply-accumulate count refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttentionVariant {
    /// Only the final position queries: one length-L score vector per head.
    LastQuery,
    /// Every position queries: an L×L score matrix per head.
    Full,
}

impl AttentionVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::LastQuery => "last_query",
            Self::Full => "full",
        }
    }
}

/// Multiply-accumulates in the score (`q · kᵀ`) stage.
pub fn attention_flops(len: usize, d: usize, n_heads: usize, variant: AttentionVariant) -> u64 {
    let d_k = (d / n_heads) as u64;
    let (len, heads) = (len as u64, n_heads as u64);
    match variant {
        AttentionVariant::LastQuery => heads * len * d_k,
        AttentionVariant::Full => heads * len * len * d_k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use AttentionVariant::*;

    #[test]
    fn direct_counts() {
        assert_eq!(attention_flops(1024, 32, 2, LastQuery), 32_768);
        assert_eq!(attention_flops(1024, 32, 2, Full), 33_554_432);
        assert_eq!(attention_flops(1728, 128, 8, LastQuery), 221_184);
        assert_eq!(attention_flops(1728, 128, 8, Full), 382_205_952);
    }

    #[test]
    fn ratio_and_scaling() {
        for &(len, d, h) in &[(1, 8, 1), (17, 32, 4), (256, 128, 32), (1728, 128, 2)] {
            let lq = attention_flops(len, d, h, LastQuery);
            let full = attention_flops(len, d, h, Full);
            assert_eq!(full, lq * len as u64);
            assert_eq!(attention_flops(2 * len, d, h, LastQuery), 2 * lq);
            assert_eq!(attention_flops(2 * len, d, h, Full), 4 * full);
        }
    }
}
