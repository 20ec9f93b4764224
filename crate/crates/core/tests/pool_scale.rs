//! Desk-scale pool run: the default-sized pool must complete and produce
//! pairwise-distinct models.

use basinlab::data::{generate, SyntheticConfig};
use basinlab::nn::{Activation, ArchitectureDescriptor};
use basinlab::train::{train_pool, OptimizerSpec, PoolInit, TrainConfig};

#[test]
fn ninety_model_pool_yields_distinct_weights() {
    let data = generate(&SyntheticConfig {
        n_subjects: 1200,
        n_sites: 6,
        input_dim: 16,
        class_separation: 1.6,
        site_effect_scale: 0.5,
        auxiliary_effect_scale: 1.0,
        label_balance: 0.5,
        seed: 90,
    })
    .unwrap();
    let arch = ArchitectureDescriptor::new(16, vec![16, 8], Activation::Relu).unwrap();
    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 32,
        optimizer: OptimizerSpec::Adam {
            lr0: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        },
        gamma: 0.4,
        seed: 9000,
    };
    let pool = train_pool(&cfg, &data, &arch, 90, PoolInit::Random).unwrap();
    assert_eq!(pool.members.len(), 90);
    assert!(pool.failures.is_empty());
    for i in 0..pool.members.len() {
        for j in i + 1..pool.members.len() {
            assert!(
                !pool.members[i]
                    .last
                    .weights
                    .bits_eq(&pool.members[j].last.weights),
                "members {i} and {j} converged to identical weights"
            );
        }
    }
}
