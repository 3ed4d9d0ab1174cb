//! Manual probe (ignored by default): loads trained models from directories
//! given by SHR_PROBE_MODELS / SHR_PROBE_DATA and reports how concentrated
//! the policy's action distributions are along test rollouts, plus per-step
//! agreement with the greedy argmax.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shr_core::confmap::Scene;
use shr_core::geometry::make_synthetic_head;
use shr_core::policy::{apply_action, forward, sample_action, Action, RecurrentState};
use shr_core::refine::PreparedScene;
use shr_core::scoring::{build_state, score_components};
use shr_harness::config::RunConfig;
use shr_harness::refdb::load_refdb;
use shr_harness::synth::{list_scene_dirs, Split};
use shr_harness::train::load_models;

#[test]
#[ignore]
fn probe_entropy_and_greedy_agreement() {
    let models_dir = std::path::PathBuf::from(std::env::var("SHR_PROBE_MODELS").unwrap());
    let data_dir = std::path::PathBuf::from(std::env::var("SHR_PROBE_DATA").unwrap());
    let config = RunConfig { model_points: 2000, ..Default::default() };
    let model = make_synthetic_head(config.model_points, config.model_seed);
    let (visibility, policies) = load_models(&models_dir).unwrap();
    let db = load_refdb(&data_dir.join("refdb")).unwrap();

    let mut max_prob_sum = 0.0;
    let mut agree = 0usize;
    let mut total = 0usize;
    for &level in &[0.0, 0.09, 0.25] {
        let paths = list_scene_dirs(&data_dir.join("scenes"), Split::Test, level).unwrap();
        for path in paths.iter().take(10) {
            let scene = Scene::load_bundle(path).unwrap();
            let inference = config.inference(9);
            let Ok(prepared) = PreparedScene::prepare(&scene, &model, &visibility, &db, &inference)
            else {
                continue;
            };
            for sp in 0..3 {
                let mut x_c = prepared.initial.sp_positions;
                let mut rs = RecurrentState::zeros();
                let mut rng = ChaCha8Rng::seed_from_u64(33 + sp as u64);
                for _ in 0..15 {
                    let pose = prepared.hypothesize_at(&x_c).unwrap();
                    let state = build_state(&pose, &model, &prepared.stack, &prepared.mask);
                    let (probs, next) = forward(&policies[sp], &state, &rs).unwrap();
                    rs = next;
                    max_prob_sum += probs.iter().cloned().fold(0.0f64, f64::max);

                    // Greedy argmax for the same configuration.
                    let mut best = (f64::MIN, 0usize);
                    for action in Action::ALL {
                        let moved = apply_action(
                            (x_c[sp].x, x_c[sp].y),
                            action,
                            prepared.eps2,
                            scene.roi.omega(),
                            &scene.roi,
                        );
                        let mut cand = x_c;
                        cand[sp] = nalgebra::Point2::new(moved.0, moved.1);
                        let p2 = prepared.hypothesize_at(&cand).unwrap();
                        let s =
                            score_components(&p2, &model, &prepared.stack, &prepared.mask, &prepared.weights).s;
                        if s > best.0 {
                            best = (s, action as usize);
                        }
                    }
                    let policy_argmax = probs
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .unwrap()
                        .0;
                    agree += (policy_argmax == best.1) as usize;
                    total += 1;

                    let sampled = sample_action(&probs, &mut rng);
                    let moved = apply_action(
                        (x_c[sp].x, x_c[sp].y),
                        Action::from_index(sampled),
                        prepared.eps2,
                        scene.roi.omega(),
                        &scene.roi,
                    );
                    x_c[sp] = nalgebra::Point2::new(moved.0, moved.1);
                }
            }
        }
    }
    println!(
        "mean max-prob {:.3}, argmax-agreement with greedy {:.3} over {} steps",
        max_prob_sum / total as f64,
        agree as f64 / total as f64,
        total
    );
}
