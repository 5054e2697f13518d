use jova_core::data::Split;
use jova_core::eval::{evaluate, EvalOptions, PopularityScorer};
use jova_core::model::{Hyperparameters, JovaModel, Mode, ModelShape};
use jova_core::nn::gradcheck::Parameters;
use jova_core::synthetic::{community_dataset, CommunityConfig};
use jova_core::train::{train, TrainConfig};
use jova_core::Error;

fn two_communities() -> jova_core::data::InteractionMatrix {
    let config = CommunityConfig {
        users: 120,
        items: 80,
        communities: 2,
        items_per_user: 20,
        ..CommunityConfig::default()
    };
    community_dataset(&config, 11).unwrap()
}

fn valid_opts() -> EvalOptions {
    EvalOptions {
        ks: vec![10],
        split: Split::Valid,
        ..EvalOptions::default()
    }
}

#[test]
fn trained_model_beats_popularity_on_validation() {
    let matrix = two_communities();
    let shape = ModelShape {
        hidden: vec![64],
        latent_dim: 16,
    };
    let model = JovaModel::new(matrix.n_users(), matrix.n_items(), &shape, Hyperparameters::default(), Mode::JovaHinge, 4).unwrap();
    let config = TrainConfig {
        max_epochs: 40,
        ..TrainConfig::default()
    };
    let out = train(model, &matrix, &config, |_| {}).unwrap();
    let trained = evaluate(&out.model.predictor(&matrix).unwrap(), &matrix, &valid_opts()).unwrap();
    let popular = evaluate(&PopularityScorer::new(&matrix), &matrix, &valid_opts()).unwrap();
    let (t, p) = (trained.at(10).unwrap().ndcg, popular.at(10).unwrap().ndcg);
    assert!(t > p, "trained {t} vs popularity {p}");
    assert_eq!(out.best_valid_ndcg, Some(t));
}

#[test]
fn zero_beta_hinge_trains_exactly_like_jova() {
    let matrix = two_communities();
    let shape = ModelShape {
        hidden: vec![16],
        latent_dim: 4,
    };
    let config = TrainConfig {
        max_epochs: 5,
        block_users: 50,
        block_items: 30,
        ..TrainConfig::default()
    };
    let run = |mode, beta| {
        let hyper = Hyperparameters {
            beta,
            ..Hyperparameters::default()
        };
        let model = JovaModel::new(matrix.n_users(), matrix.n_items(), &shape, hyper, mode, 8).unwrap();
        train(model, &matrix, &config, |_| {}).unwrap()
    };
    let jova = run(Mode::Jova, 0.7);
    let hinge = run(Mode::JovaHinge, 0.0);
    assert_eq!(jova.log, hinge.log);
    assert_eq!(jova.model.parameters(), hinge.model.parameters());
}

#[test]
fn user_only_mode_leaves_the_item_vae_alone() {
    let matrix = two_communities();
    let shape = ModelShape {
        hidden: vec![8],
        latent_dim: 2,
    };
    let model = JovaModel::new(matrix.n_users(), matrix.n_items(), &shape, Hyperparameters::default(), Mode::UserVaeOnly, 2).unwrap();
    let item_before = model.item_vae().parameters();
    let user_before = model.user_vae().parameters();
    let config = TrainConfig {
        max_epochs: 3,
        early_stopping: false,
        ..TrainConfig::default()
    };
    let out = train(model, &matrix, &config, |_| {}).unwrap();
    assert_eq!(out.model.item_vae().parameters(), item_before);
    assert_ne!(out.model.user_vae().parameters(), user_before);
    assert!(out.log.iter().all(|r| r.item_elbo == 0.0 && r.hinge == 0.0));
}

#[test]
fn non_finite_parameters_abort_with_a_location() {
    let matrix = two_communities();
    let shape = ModelShape {
        hidden: vec![8],
        latent_dim: 2,
    };
    let mut model = JovaModel::new(matrix.n_users(), matrix.n_items(), &shape, Hyperparameters::default(), Mode::Jova, 2).unwrap();
    let mut params = model.parameters();
    params[0] = f64::NAN;
    model.set_parameters(&params).unwrap();
    let err = train(model, &matrix, &TrainConfig::default(), |_| {}).unwrap_err();
    assert_eq!(err, Error::NonFiniteLoss { epoch: 1, block: 0 });
    assert_eq!(err.to_string(), "non-finite loss at epoch 1, block 0");
}
