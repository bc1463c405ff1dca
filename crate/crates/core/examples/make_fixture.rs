//! Regenerates `fixtures/toy`: 50 users, 30 items, 6 genres and a planted
//! popularity skew (a few blockbusters, a long tail, and users ranging from
//! niche to mainstream taste).
//!
//! cargo run -p poplift --example make_fixture -- fixtures/toy

use std::fmt::Write as _;
use std::path::PathBuf;

use poplift::rng::SeededRng;

const GENRES: [&str; 6] = ["Action", "Comedy", "Drama", "Romance", "Sci-Fi", "Thriller"];
const USERS: u32 = 50;
const ITEMS: u32 = 30;

fn item_genres(item: u32) -> Vec<&'static str> {
    let first = GENRES[(item as usize * 7) % GENRES.len()];
    let mut g = vec![first];
    if item.is_multiple_of(3) {
        let second = GENRES[(item as usize * 5 + 1) % GENRES.len()];
        if second != first {
            g.push(second);
        }
    }
    g
}

fn main() -> std::io::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixtures/toy".into())
        .into();
    std::fs::create_dir_all(&dir)?;
    let mut rng = SeededRng::new(20_240_601);

    let mut items = String::from("item_id,title,genres\n");
    for i in 1..=ITEMS {
        writeln!(items, "{i},Film {i:02},{}", item_genres(i).join("|")).unwrap();
    }

    // Item i has base appeal 1/i; user u mixes that with a flat tail preference.
    let mut ratings = String::from("user_id,item_id,rating\n");
    for u in 1..=USERS {
        let mainstream = f64::from(u - 1) / f64::from(USERS - 1);
        let weights: Vec<f64> = (1..=ITEMS)
            .map(|i| {
                mainstream * 4.0 / f64::from(i)
                    + (1.0 - mainstream) * f64::from(i) / f64::from(ITEMS * 4)
            })
            .collect();
        let n_ratings = 8 + rng.below(8);
        let mut chosen: Vec<u32> = Vec::with_capacity(n_ratings);
        while chosen.len() < n_ratings {
            let total: f64 = (1..=ITEMS)
                .filter(|i| !chosen.contains(i))
                .map(|i| weights[i as usize - 1])
                .sum();
            let mut target = rng.unit() * total;
            let pick = (1..=ITEMS)
                .filter(|i| !chosen.contains(i))
                .find(|&i| {
                    target -= weights[i as usize - 1];
                    target <= 0.0
                })
                .unwrap_or_else(|| (1..=ITEMS).rev().find(|i| !chosen.contains(i)).unwrap());
            chosen.push(pick);
        }
        chosen.sort_unstable();
        for i in chosen {
            let base = if i <= 5 { 4 } else { 3 };
            let rating = (base + rng.below(3) as i64 - 1).clamp(1, 5);
            writeln!(ratings, "{u},{i},{rating}").unwrap();
        }
    }

    std::fs::write(dir.join("items.csv"), items)?;
    std::fs::write(dir.join("ratings.csv"), ratings)?;
    Ok(())
}
