//! Writes a synthetic dataset in the MovieLens 1M `.dat` layout with the same
//! shape (6040 users, 3706 items, about one million ratings, 18 genres) and a
//! long-tailed item popularity. Useful for runtime checks when the real data is
//! not at hand; its metric values mean nothing.
//!
//! cargo run --release -p poplift --example synth_movielens -- /tmp/synth-ml1m

use std::fmt::Write as _;
use std::path::PathBuf;

use poplift::rng::SeededRng;

const GENRES: [&str; 18] = [
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];
const USERS: usize = 6040;
const ITEMS: usize = 3706;
const TARGET: usize = 1_000_209;

fn main() -> std::io::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "synth-ml1m".into())
        .into();
    std::fs::create_dir_all(&dir)?;
    let mut rng = SeededRng::new(1);

    let mut movies = String::new();
    for i in 1..=ITEMS {
        let n = 1 + rng.below(3);
        let mut g: Vec<&str> = Vec::new();
        while g.len() < n {
            let pick = GENRES[rng.below(GENRES.len())];
            if !g.contains(&pick) {
                g.push(pick);
            }
        }
        writeln!(movies, "{i}::Movie {i} (1990)::{}", g.join("|")).unwrap();
    }

    // Cumulative Zipf-like item weights; users draw distinct items from it.
    let weights: Vec<f64> = (1..=ITEMS).map(|r| 1.0 / (r as f64).powf(0.9)).collect();
    let mut cumulative = Vec::with_capacity(ITEMS);
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    // Per-user counts between 20 and twice the mean, nudged to hit the target.
    let per_user = TARGET / USERS;
    let mut counts: Vec<usize> = (0..USERS)
        .map(|_| 20 + rng.below(2 * per_user - 40))
        .collect();
    let mut total: usize = counts.iter().sum();
    while total != TARGET {
        let u = rng.below(USERS);
        if total < TARGET && counts[u] < 2 * per_user {
            counts[u] += 1;
            total += 1;
        } else if total > TARGET && counts[u] > 20 {
            counts[u] -= 1;
            total -= 1;
        }
    }
    let mut ratings = String::with_capacity(TARGET * 24);
    let mut seen = vec![usize::MAX; ITEMS];
    let mut written = 0;
    for (u, &n) in counts.iter().enumerate() {
        let mut got = 0;
        while got < n {
            let x = rng.unit() * acc;
            let ix = cumulative.partition_point(|&c| c < x).min(ITEMS - 1);
            if seen[ix] == u {
                continue;
            }
            seen[ix] = u;
            let rating = 1 + rng.below(5);
            writeln!(
                ratings,
                "{}::{}::{rating}::{}",
                u + 1,
                ix + 1,
                978_300_000 + written
            )
            .unwrap();
            got += 1;
            written += 1;
        }
    }
    std::fs::write(dir.join("movies.dat"), movies)?;
    std::fs::write(dir.join("ratings.dat"), ratings)?;
    eprintln!("{written} ratings written to {}", dir.display());
    Ok(())
}
