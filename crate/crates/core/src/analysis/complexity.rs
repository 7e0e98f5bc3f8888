use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Nlms,
    Nsaf,
    NlmsNkp,
    NsafNkpI,
    NsafNkpII,
    RnsafNkpMcc,
    RnsafNkpLc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Nlms,
        Algorithm::Nsaf,
        Algorithm::NlmsNkp,
        Algorithm::NsafNkpI,
        Algorithm::NsafNkpII,
        Algorithm::RnsafNkpMcc,
        Algorithm::RnsafNkpLc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nlms => "NLMS",
            Algorithm::Nsaf => "NSAF",
            Algorithm::NlmsNkp => "NLMS-NKP",
            Algorithm::NsafNkpI => "NSAF-NKP-I",
            Algorithm::NsafNkpII => "NSAF-NKP-II",
            Algorithm::RnsafNkpMcc => "RNSAF-NKP-MCC",
            Algorithm::RnsafNkpLc => "RNSAF-NKP-LC",
        }
    }

    fn is_nkp(self) -> bool {
        !matches!(self, Algorithm::Nlms | Algorithm::Nsaf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityQuery {
    pub algorithm: Algorithm,
    pub d: u64,
    pub d1: u64,
    pub d2: u64,
    pub p: u64,
    pub n: u64,
    pub l: u64,
    pub k: u64,
}

/// Multiplications (and divisions) per `k` input samples.
pub fn complexity(q: &ComplexityQuery) -> Result<u64> {
    let ComplexityQuery {
        algorithm,
        d,
        d1,
        d2,
        p,
        n,
        l,
        k,
    } = *q;
    if [d, d1, d2, p, n, l, k].contains(&0) {
        return Err(Error::invalid("complexity", "all parameters must be >= 1"));
    }
    if algorithm.is_nkp() && d != d1 * d2 {
        return Err(Error::invalid(
            "D",
            format!("NKP rows need D = D1*D2 = {}, got {d}", d1 * d2),
        ));
    }
    let split = (d + 1) * l * n;
    let type2 = p * d + 4 * p * n * d + 3 * n * p * d2 + 3 * n * p * d1 + 4 * n + split;
    Ok(match algorithm {
        Algorithm::Nlms => k * (3 * d + 2),
        Algorithm::Nsaf => 3 * n * d + 2 * n + split,
        Algorithm::NlmsNkp => k * (5 * p * d + 3 * p * d1 + 3 * p * d2 + 4),
        Algorithm::NsafNkpII => type2,
        Algorithm::NsafNkpI => {
            p * d
                + 4 * d * p * l
                + (p * d1 + 1) * l * n
                + (p * d2 + 1) * l * n
                + 3 * p * n * d1
                + 3 * p * n * d2
                + 4 * n
        }
        Algorithm::RnsafNkpMcc | Algorithm::RnsafNkpLc => type2 + n * p * (d1 + d2) + 8 * n,
    })
}
