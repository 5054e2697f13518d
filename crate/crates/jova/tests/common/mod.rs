#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jova_core::data::RawRating;
use jova_core::synthetic::{community_ratings, CommunityConfig};
use jova_core::{SeededRng, Stream};

/// Ratings in MovieLens `ratings.dat` layout with numeric ids: the community
/// ratings, plus `sparse_users` users with fewer than 20 positives and
/// `malformed` broken lines.
pub fn ml_style_ratings(config: &CommunityConfig, seed: u64, sparse_users: usize, malformed: usize) -> (String, Vec<RawRating>) {
    let mut ratings = community_ratings(config, seed).unwrap();
    let mut rng = SeededRng::new(seed, Stream::Synthetic);
    for s in 0..sparse_users {
        for _ in 0..(5 + rng.below(14)) {
            ratings.push(RawRating {
                user: format!("u{}", config.users + s),
                item: format!("i{}", rng.below(config.items)),
                value: 5.0,
            });
        }
    }
    let mut text = String::new();
    for (n, r) in ratings.iter().enumerate() {
        let user: usize = r.user[1..].parse().unwrap();
        let item: usize = r.item[1..].parse().unwrap();
        let _ = writeln!(text, "{}::{}::{}::{}", user + 1, item + 1, r.value, 978_300_000 + n);
        if n % 200 == 199 && n / 200 < malformed {
            text.push_str("broken line without fields\n");
        }
    }
    (text, ratings)
}

pub fn write_ml_style(path: &Path, config: &CommunityConfig, seed: u64) {
    std::fs::write(path, ml_style_ratings(config, seed, 5, 3).0).unwrap();
}

pub fn jova(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jova")).args(args).output().unwrap()
}

pub fn jova_ok(args: &[&str]) -> String {
    let out = jova(args);
    assert!(
        out.status.success(),
        "jova {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// A small, fast configuration for end-to-end runs.
pub fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        "seed = 5\nout = {:?}\n\n[model]\nhidden = [24]\nlatent_dim = 6\n\n[train]\nmax_epochs = 5\nearly_stopping = false\n{extra}",
        dir.join("out")
    );
    std::fs::write(&path, text).unwrap();
    path
}

pub fn small_community() -> CommunityConfig {
    CommunityConfig {
        users: 80,
        items: 90,
        communities: 3,
        items_per_user: 20,
        ..CommunityConfig::default()
    }
}
