use super::{check_index, Method, SeparabilityCertificate, SeparabilityError, SeparabilityTest, Verdict, Witness};
use crate::geometry::{dot, PointCloud};

/// `X_i` is Fisher separable when `(X_i, X_j) < (X_i, X_i)` for every `j != i`.
/// Equality counts as a failure.
#[derive(Debug, Clone, Copy, Default)]
pub struct FisherCheck;

impl FisherCheck {
    /// Slack `min_j (X_i, X_i) - (X_i, X_j)`, or `+inf` for a singleton.
    pub fn margin(cloud: &PointCloud, i: usize) -> f64 {
        let x = cloud.point(i);
        let xx = dot(x, x);
        cloud
            .points()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, y)| xx - dot(x, y))
            .fold(f64::INFINITY, f64::min)
    }
}

impl SeparabilityTest for FisherCheck {
    fn name(&self) -> &'static str {
        "fisher"
    }

    fn check_point(&self, cloud: &PointCloud, i: usize) -> Result<SeparabilityCertificate, SeparabilityError> {
        check_index(cloud, i)?;
        let margin = Self::margin(cloud, i);
        let (verdict, witness) = if margin > 0.0 {
            (Verdict::Separable, Witness::Hyperplane(cloud.point(i).to_vec()))
        } else {
            (Verdict::NotSeparable, Witness::None)
        };
        Ok(SeparabilityCertificate { index: i, verdict, witness, margin, method: Method::Fisher })
    }
}
