//! Seeded stand-in for real survey data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::storage::{SurveyResponse, CSV_HEADER};

fn likert(latent: f64, rng: &mut ChaCha8Rng, noise: &Normal<f64>) -> u8 {
    (latent + noise.sample(rng)).round().clamp(1.0, 5.0) as u8
}

/// `n` questionnaires where satisfaction tracks engagement more than
/// relevance. Same seed, same output.
pub fn generate_surveys(n: usize, seed: u64) -> Vec<SurveyResponse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let engagement = Normal::new(4.3, 0.45).expect("valid normal");
    let relevance = Normal::new(4.5, 0.5).expect("valid normal");
    let residual = Normal::new(0.0, 0.3).expect("valid normal");
    let item_noise = Normal::new(0.0, 0.4).expect("valid normal");

    (0..n)
        .map(|_| {
            let e = engagement.sample(&mut rng);
            let r = relevance.sample(&mut rng);
            let s = 2.9 + 0.4 * e - 0.05 * r + residual.sample(&mut rng);
            let mut items = |latent: f64| {
                [
                    likert(latent, &mut rng, &item_noise),
                    likert(latent, &mut rng, &item_noise),
                    likert(latent, &mut rng, &item_noise),
                ]
            };
            SurveyResponse {
                question_relevance: items(r),
                engagement: items(e),
                satisfaction: items(s),
            }
        })
        .collect()
}

/// Synthetic data in the export CSV format.
pub fn synthetic_csv(n: usize, seed: u64) -> String {
    let mut csv = format!("{CSV_HEADER}\n");
    for (i, s) in generate_surveys(n, seed).iter().enumerate() {
        csv.push_str(&format!(
            "synthetic-{i:04},{:.4},{:.4},{:.4}\n",
            s.question_relevance_score(),
            s.engagement_score(),
            s.satisfaction_score()
        ));
    }
    csv
}
