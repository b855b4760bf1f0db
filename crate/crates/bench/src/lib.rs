//! Workload generators shared by the benchmarks.

use confcurate_core::normalize::PositionCategory;
use confcurate_core::resolve::{MatchContext, NameVariant};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GIVEN: &[&str] = &[
    "Amara", "Anton", "Bianca", "Carlos", "Chiara", "Delia", "Dmitri", "Emil", "Fiona", "Greta",
    "Helena", "Hiroshi", "Ingrid", "Jamal", "Julia", "Keiko", "Kofi", "Lucia", "Marisol", "Mateo",
    "Nadia", "Oscar", "Priya", "Rosalind", "Sofia", "Tomas",
];
const FAMILY: &[&str] = &[
    "Abernathy",
    "Brennan",
    "Castellanos",
    "Delacroix",
    "Eriksen",
    "Ferreira",
    "Gallagher",
    "Haddad",
    "Kowalski",
    "Lindqvist",
    "Marchetti",
    "Nakamura",
    "Okonkwo",
    "Petrovic",
    "Quintero",
    "Rodriguez",
    "Sorensen",
    "Thornbury",
    "Vasquez",
    "Whitfield",
    "Yamamoto",
    "Kim",
    "Lee",
    "Chen",
];

/// `people` synthetic researchers written under several spellings each,
/// shuffled, with year and institution evidence.
pub fn name_variants(people: usize, seed: u64) -> (Vec<NameVariant>, MatchContext) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = MatchContext::default();
    let mut names = Vec::new();
    for id in 0..people {
        let given = GIVEN[rng.gen_range(0..GIVEN.len())];
        let family = FAMILY[rng.gen_range(0..FAMILY.len())];
        let middle = (b'A' + rng.gen_range(0..26u8)) as char;
        for r in 0..rng.gen_range(1..=6u16) {
            let name = match rng.gen_range(0..4) {
                0 => format!("{given} {middle}. {family}"),
                1 => format!("{given} {family}"),
                2 => format!("{}. {family}", &given[..1]),
                _ => format!("{family}, {given}"),
            };
            ctx.add_institution(&name, &format!("Institution {}", id % 40));
            ctx.add_position(&name, 2010 + r, PositionCategory::AssistantProfessor);
            names.push(name);
        }
    }
    names.sort();
    names.dedup();
    names.shuffle(&mut rng);
    let variants = names
        .iter()
        .map(|n| NameVariant::new(n).expect("generated names are non-empty"))
        .collect();
    (variants, ctx)
}

/// Pairs of similar-length author strings for similarity scoring.
pub fn name_pairs(n: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let pick = |rng: &mut ChaCha8Rng| {
                format!(
                    "{} {}",
                    GIVEN[rng.gen_range(0..GIVEN.len())],
                    FAMILY[rng.gen_range(0..FAMILY.len())]
                )
            };
            (pick(&mut rng), pick(&mut rng))
        })
        .collect()
}
