//! Seeded stand-in for the UCI adult autism screening file.
//!
//! The generated table has the published file's header (including the
//! `contry_of_res` spelling), 704 rows, roughly its marginal distributions and
//! its missing-value pattern: ethnicity and relation missing together on 95
//! rows, age missing on 2. The label follows the AQ-10 rule of the original:
//! `Class/ASD = YES` iff the item total `result` exceeds 6.
//!
//! Results obtained on this table are not results on the real data.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

pub const N_ROWS: usize = 704;
const N_MISSING_ETHNICITY: usize = 95;
const N_MISSING_AGE: usize = 2;

pub const HEADER: &str = "A1_Score,A2_Score,A3_Score,A4_Score,A5_Score,A6_Score,A7_Score,A8_Score,A9_Score,A10_Score,age,gender,ethnicity,jundice,austim,contry_of_res,used_app_before,result,age_desc,relation,Class/ASD";

const ETHNICITY: &[(&str, u32)] = &[
    ("White-European", 233),
    ("Asian", 123),
    ("Middle Eastern", 92),
    ("Black", 43),
    ("South Asian", 36),
    ("Others", 30),
    ("Latino", 20),
    ("Hispanic", 13),
    ("Pasifika", 12),
    ("Turkish", 6),
    ("others", 1),
];

const COUNTRY: &[(&str, u32)] = &[
    ("United States", 113),
    ("United Arab Emirates", 82),
    ("New Zealand", 81),
    ("India", 81),
    ("United Kingdom", 77),
    ("Jordan", 47),
    ("Australia", 27),
    ("Canada", 15),
    ("Sri Lanka", 14),
    ("Afghanistan", 13),
    ("France", 11),
    ("Netherlands", 10),
    ("Brazil", 9),
    ("Mexico", 8),
    ("Russia", 7),
    ("Iran", 7),
    ("Italy", 5),
    ("Germany", 4),
    ("Ireland", 4),
    ("Spain", 3),
    ("Egypt", 2),
    ("Sweden", 2),
    ("Pakistan", 2),
    ("Japan", 1),
    ("Austria", 1),
];

const RELATION: &[(&str, u32)] = &[
    ("Self", 522),
    ("Parent", 50),
    ("Relative", 28),
    ("Others", 5),
    ("Health care professional", 4),
];

/// Item difficulties for the ten questionnaire items, on the latent scale.
const ITEM_OFFSET: [f64; 10] = [-0.9, -0.1, 0.1, -0.3, -0.2, 0.4, -0.4, -0.5, 0.2, -1.0];

fn pick<'a>(rng: &mut ChaCha8Rng, table: &'a [(&'a str, u32)]) -> &'a str {
    let dist = WeightedIndex::new(table.iter().map(|(_, w)| *w)).expect("non-empty weights");
    table[dist.sample(rng)].0
}

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

/// Generates the surrogate table as CSV text (header plus [`N_ROWS`] rows).
pub fn generate(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");

    let missing_eth = sample(&mut rng, N_ROWS, N_MISSING_ETHNICITY).into_vec();
    let mut missing_age = Vec::new();
    while missing_age.len() < N_MISSING_AGE {
        let i = rng.random_range(0..N_ROWS);
        if !missing_eth.contains(&i) && !missing_age.contains(&i) {
            missing_age.push(i);
        }
    }

    let mut out = String::with_capacity(N_ROWS * 120);
    out.push_str(HEADER);
    out.push('\n');
    for row in 0..N_ROWS {
        let trait_level: f64 = std_normal.sample(&mut rng) - 0.35;
        let items: Vec<u8> = ITEM_OFFSET
            .iter()
            .map(|&b| {
                let p = 1.0 / (1.0 + (-1.7 * (trait_level - b)).exp());
                u8::from(rng.random_bool(p))
            })
            .collect();
        let result: u32 = items.iter().map(|&v| u32::from(v)).sum();
        let positive = result > 6;

        let age = (29.0 + 9.5 * std_normal.sample(&mut rng))
            .round()
            .clamp(17.0, 64.0) as u32;
        let gender = if rng.random_bool(0.52) { "m" } else { "f" };
        let jundice = rng.random_bool(0.10);
        let austim = rng.random_bool(if positive { 0.22 } else { 0.09 });
        let used_app = rng.random_bool(0.02);
        let ethnicity = pick(&mut rng, ETHNICITY);
        let country = pick(&mut rng, COUNTRY);
        let relation = pick(&mut rng, RELATION);

        for v in &items {
            write!(out, "{v},").unwrap();
        }
        if missing_age.contains(&row) {
            out.push_str("?,");
        } else {
            write!(out, "{age},").unwrap();
        }
        let (eth, rel) = if missing_eth.contains(&row) {
            ("?", "?")
        } else {
            (ethnicity, relation)
        };
        writeln!(
            out,
            "{gender},{eth},{},{},{country},{},{result},18 and more,{rel},{}",
            yes_no(jundice),
            yes_no(austim),
            yes_no(used_app),
            if positive { "YES" } else { "NO" }
        )
        .unwrap();
    }
    out
}
