//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use confcurate_core::affiliation::RulesExtractor;
use confcurate_core::analytics::cagr;
use confcurate_core::fixture::{FixtureCorpus, FixturePresentation, PEOPLE};
use confcurate_core::methodology::{cohen_kappa, MethodologyLabel};
use confcurate_core::normalize::{
    classify_position, normalize_country, normalize_name, CountryMapping, PositionCategory,
};
use confcurate_core::resolve::{
    resolve, score_pair, select_canonical, token_sort_ratio, MatchContext, NameVariant,
    ScoringPolicy,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn within(start: Instant, budget: Duration) -> Check {
    let elapsed = start.elapsed();
    ensure!(elapsed < budget, "took {elapsed:.2?}, budget {budget:?}");
    Ok(())
}

fn proptest_runner() -> TestRunner {
    TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    })
}

// 1 -------------------------------------------------------------------------

fn cagr_reproduction() -> Check {
    let r = cagr(423.0, 1935.0, 21).map_err(|e| e.to_string())?;
    ensure!((0.0747..=0.0757).contains(&r), "cagr(423, 1935, 21) = {r}");
    Ok(())
}

// 2 -------------------------------------------------------------------------

const GIVEN: &[&str] = &[
    "Amara",
    "Anton",
    "Bogdan",
    "Bianca",
    "Chiara",
    "Carlos",
    "Dmitri",
    "Delia",
    "Esperanza",
    "Emil",
    "Farid",
    "Fiona",
    "Greta",
    "Gustavo",
    "Hiroshi",
    "Helena",
    "Ingrid",
    "Ivan",
    "Jamal",
    "Julia",
    "Keiko",
    "Kofi",
    "Lorenzo",
    "Lucia",
    "Marisol",
    "Mateo",
];
const FAMILY: &[&str] = &[
    "Abernathy",
    "Okonkwo",
    "Nakamura",
    "Fitzgerald",
    "Rodriguez",
    "Kowalski",
    "Lindqvist",
    "Haddad",
    "Castellanos",
    "Thornbury",
    "Vasquez",
    "Mbeki",
    "Petrovic",
    "Gallagher",
    "Kim",
    "Lee",
    "Chen",
    "Whitfield",
    "Yamamoto",
    "Brennan",
    "Sorensen",
    "Delacroix",
    "Quintero",
];

/// Names of `identities` people, each written several ways that keep the
/// person's given initial and surname, plus the evidence context. People
/// sharing a surname share the given initial, so distinct people can land
/// in one block.
fn synthetic_corpus(seed: u64, identities: usize) -> (Vec<(usize, String)>, MatchContext) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut people: Vec<(&str, &str, char)> = Vec::new();
    let mut initial_of: BTreeMap<&str, char> = BTreeMap::new();
    while people.len() < identities {
        let given = GIVEN[rng.gen_range(0..GIVEN.len())];
        let family = FAMILY[rng.gen_range(0..FAMILY.len())];
        let initial = given.chars().next().unwrap();
        if initial_of.get(family).is_some_and(|&c| c != initial)
            || people.iter().any(|&(g, f, _)| g == given && f == family)
        {
            continue;
        }
        initial_of.insert(family, initial);
        people.push((given, family, (b'A' + rng.gen_range(0..26u8)) as char));
    }
    let ladder = [
        PositionCategory::DoctoralStudent,
        PositionCategory::AssistantProfessor,
        PositionCategory::AssociateProfessor,
        PositionCategory::FullProfessor,
    ];
    let mut ctx = MatchContext::default();
    let mut names = Vec::new();
    for (id, &(given, family, middle)) in people.iter().enumerate() {
        let start = rng.gen_range(0..ladder.len());
        for r in 0..rng.gen_range(2..=8) {
            let name = match rng.gen_range(0..5) {
                0 => format!("{given} {middle}. {family}"),
                1 => format!("{given} {family}"),
                2 => format!("{}. {family}", &given[..1]),
                3 => format!("{family}, {given}"),
                _ => format!("{} {}", given.to_uppercase(), family.to_uppercase()),
            };
            ctx.add_position(&name, 2010 + 2 * r as u16, ladder[(start + r / 3).min(3)]);
            ctx.add_institution(&name, &format!("Institution {}", id % 7));
            names.push((id, name));
        }
    }
    names.shuffle(&mut rng);
    (names, ctx)
}

/// Every pair scored, components by breadth-first search.
fn brute_force(
    variants: &[NameVariant],
    ctx: &MatchContext,
    policy: &ScoringPolicy,
) -> BTreeSet<BTreeSet<String>> {
    let n = variants.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if score_pair(&variants[i], &variants[j], ctx, policy) >= policy.threshold {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut component = BTreeSet::new();
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            component.insert(variants[x].key.clone());
            for &y in &adj[x] {
                if !std::mem::replace(&mut seen[y], true) {
                    queue.push_back(y);
                }
            }
        }
        out.insert(component);
    }
    out
}

fn blocked_matches_all_pairs() -> Check {
    let start = Instant::now();
    let policy = ScoringPolicy::default();
    for seed in 0..6 {
        let (names, ctx) = synthetic_corpus(seed, 24);
        let identities: BTreeSet<usize> = names.iter().map(|(id, _)| *id).collect();
        ensure!(names.len() <= 200, "seed {seed}: {} records", names.len());
        ensure!(
            identities.len() >= 20,
            "seed {seed}: {} identities",
            identities.len()
        );
        let variants: Vec<NameVariant> = names
            .iter()
            .map(|(_, n)| NameVariant::new(n).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let blocked: BTreeSet<BTreeSet<String>> = resolve(&variants, &ctx, &policy)
            .into_iter()
            .map(|c| c.members.into_iter().collect())
            .collect();
        ensure!(
            blocked == brute_force(&variants, &ctx, &policy),
            "seed {seed}: blocked and all-pairs clusterings differ"
        );
    }
    within(start, Duration::from_secs(5))
}

// 3 -------------------------------------------------------------------------

fn dp_indel(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            cur[j] = if a[i - 1] == b[j - 1] {
                prev[j - 1]
            } else {
                1 + prev[j].min(cur[j - 1])
            };
        }
        prev = cur;
    }
    prev[b.len()]
}

fn oracle_ratio(a: &str, b: &str) -> u8 {
    let sorted = |s: &str| {
        let mut t: Vec<&str> = s.split_whitespace().collect();
        t.sort();
        t.join(" ").chars().collect::<Vec<char>>()
    };
    let (a, b) = (sorted(a), sorted(b));
    let total = a.len() + b.len();
    if total == 0 {
        return 100;
    }
    let similarity = 100.0 * (total - dp_indel(&a, &b)) as f64 / total as f64;
    (similarity + 0.5).floor() as u8
}

fn similarity_laws() -> Check {
    let start = Instant::now();
    let text = || prop::collection::vec("[a-dA-D.éñ]{1,6}", 0..5).prop_map(|t| t.join(" "));

    proptest_runner()
        .run(&(text(), text()), |(a, b)| {
            prop_assert_eq!(token_sort_ratio(&a, &b), token_sort_ratio(&b, &a));
            Ok(())
        })
        .map_err(|e| format!("symmetry: {e}"))?;
    proptest_runner()
        .run(&text(), |a| {
            prop_assert_eq!(token_sort_ratio(&a, &a), 100);
            Ok(())
        })
        .map_err(|e| format!("reflexivity: {e}"))?;
    let permuted = prop::collection::vec("[a-e]{1,5}", 1..6)
        .prop_flat_map(|t| (Just(t.clone()), Just(t).prop_shuffle()));
    proptest_runner()
        .run(&(permuted, text()), |((t, shuffled), b)| {
            prop_assert_eq!(
                token_sort_ratio(&t.join(" "), &b),
                token_sort_ratio(&shuffled.join(" "), &b)
            );
            Ok(())
        })
        .map_err(|e| format!("permutation: {e}"))?;
    proptest_runner()
        .run(&(text(), text()), |(a, b)| {
            prop_assert_eq!(token_sort_ratio(&a, &b), oracle_ratio(&a, &b));
            Ok(())
        })
        .map_err(|e| format!("edit-distance oracle: {e}"))?;
    within(start, Duration::from_secs(5))
}

// 4 -------------------------------------------------------------------------

fn restricted_surnames() -> Check {
    let policy = ScoringPolicy::default();
    let ctx = MatchContext::default();
    let v = |s: &str| NameVariant::new(s).map_err(|e| e.to_string());
    for surname in ["Lee", "Kim", "Park", "Chen", "Wang", "Liu", "Zhang"] {
        let base = v(&format!("Min-Jun {surname}"))?;
        let cases = [
            ("exact-match", v(&format!("MIN-JUN {surname}"))?, true),
            ("initial-only", v(&format!("M. {surname}"))?, false),
            ("different", v(&format!("Seo-Yeon {surname}"))?, false),
        ];
        for (case, other, want_edge) in cases {
            let edge = score_pair(&base, &other, &ctx, &policy) >= policy.threshold;
            ensure!(edge == want_edge, "{surname} {case}: edge = {edge}");
        }
    }
    Ok(())
}

// 5 -------------------------------------------------------------------------

fn canonical_selection() -> Check {
    let cluster = ["Mike Sherraden", "M. Sherraden", "Michael S. Sherraden"];
    let got = select_canonical(&cluster).map_err(|e| e.to_string())?;
    ensure!(got == "Michael S. Sherraden", "selected {got}");
    Ok(())
}

// 6 -------------------------------------------------------------------------

fn position_taxonomy() -> Check {
    use PositionCategory::*;
    let cases: &[(Option<&str>, PositionCategory)] = &[
        (Some("Doctoral Student"), DoctoralStudent),
        (Some("doctoral candidate"), DoctoralStudent),
        (Some("PhD Student"), DoctoralStudent),
        (Some("Ph.D. Candidate"), DoctoralStudent),
        (Some("ABD"), DoctoralStudent),
        (Some("Assistant Professor"), AssistantProfessor),
        (Some("Associate Professor"), AssociateProfessor),
        (
            Some("Associate Professor of Social Work"),
            AssociateProfessor,
        ),
        (Some("Professor"), FullProfessor),
        (Some("Professor Emeritus"), FullProfessor),
        (Some("Clinical Professor"), ClinicalProfessor),
        (Some("Clinical Associate Professor"), ClinicalProfessor),
        (Some("Professor of Practice"), ClinicalProfessor),
        (Some("Teaching Assistant Professor"), ClinicalProfessor),
        (Some("Postdoctoral Fellow"), Postdoctoral),
        (Some("Post-doc"), Postdoctoral),
        (Some("Dean"), SeniorLeadershipAcademic),
        (
            Some("Associate Dean for Research"),
            SeniorLeadershipAcademic,
        ),
        (Some("Department Chair"), SeniorLeadershipAcademic),
        (Some("Provost"), SeniorLeadershipAcademic),
        (Some("Executive Director"), SeniorLeadershipPractice),
        (Some("Program Director"), SeniorLeadershipPractice),
        (Some("CEO"), SeniorLeadershipPractice),
        (Some("Research Associate"), ResearchStaff),
        (Some("Research Scientist"), ResearchStaff),
        (Some("Project Coordinator"), ResearchStaff),
        (Some("Research Professor"), ResearchFaculty),
        (Some("Research Associate Professor"), ResearchFaculty),
        (Some("Research Assistant Professor"), ResearchFaculty),
        (Some("Lecturer"), Instructor),
        (Some("Senior Lecturer"), Instructor),
        (Some("Instructor"), Instructor),
        (Some("Adjunct Professor"), AdjunctFaculty),
        (Some("Adjunct Assistant Professor"), AdjunctFaculty),
        (Some("MSW Student"), MastersStudent),
        (Some("Master's Student"), MastersStudent),
        (Some("Graduate Student"), MastersStudent),
        (Some("BSW Student"), UndergraduateStudent),
        (Some("Undergraduate Research Fellow"), UndergraduateStudent),
        (Some("Licensed Clinical Social Worker"), Practitioner),
        (Some("Case Manager"), Practitioner),
        (Some("N/A"), Unknown),
        (Some("   "), Unknown),
        (None, Unknown),
    ];
    for &(raw, want) in cases {
        let got = classify_position(raw);
        ensure!(got == want, "{raw:?} -> {got}, expected {want}");
    }
    ensure!(
        classify_position(Some("associate professor")) != FullProfessor,
        "modifier trap: associate professor"
    );
    Ok(())
}

// 7 -------------------------------------------------------------------------

fn country_normalization() -> Check {
    let m = CountryMapping::default();
    let explicit = [
        ("U.S.A.", "USA"),
        ("Republic of Korea", "South Korea"),
        ("P.R. China", "China"),
        ("UK", "United Kingdom"),
    ];
    for (variant, want) in explicit {
        let (country, _) = normalize_country(Some(variant), None, None, &m);
        ensure!(country.as_deref() == Some(want), "{variant} -> {country:?}");
    }
    for (abbrev, state, country) in [("MI", "Michigan", "USA"), ("ON", "Ontario", "Canada")] {
        let got = normalize_country(None, Some(abbrev), None, &m);
        let want = (Some(country.to_string()), Some(state.to_string()));
        ensure!(got == want, "{abbrev} -> {got:?}");
    }
    let parsed = RulesExtractor::new(m.clone())
        .parse("Jane Doe, PhD, University of Michigan, Ann Arbor, MI")
        .map_err(|e| e.to_string())?;
    let got = normalize_country(
        parsed.country.as_deref(),
        parsed.state.as_deref(),
        parsed.city.as_deref(),
        &m,
    );
    ensure!(
        got == (Some("USA".into()), Some("Michigan".into())),
        "Ann Arbor, MI -> {got:?} (parsed {parsed:?})"
    );
    Ok(())
}

// 8 -------------------------------------------------------------------------

fn name_normalization() -> Check {
    for (raw, want) in [
        ("José", "Jose"),
        ("Muñoz", "Munoz"),
        ("Maria Gonzalez*", "Maria Gonzalez"),
        ("*Maria Gonzalez", "Maria Gonzalez"),
        ("  María \t González  ", "Maria Gonzalez"),
    ] {
        let got = normalize_name(raw).normalized;
        ensure!(got == want, "{raw:?} -> {got:?}");
    }
    proptest_runner()
        .run(&any::<String>(), |s| {
            let once = normalize_name(&s).normalized;
            prop_assert_eq!(&normalize_name(&once).normalized, &once);
            Ok(())
        })
        .map_err(|e| format!("idempotency: {e}"))
}

// 9 -------------------------------------------------------------------------

/// Expand a confusion matrix into paired (human, machine) sequences.
fn sequences(matrix: &[&[usize]]) -> (Vec<MethodologyLabel>, Vec<MethodologyLabel>) {
    let labels = MethodologyLabel::ALL;
    let (mut h, mut m) = (Vec::new(), Vec::new());
    for (i, row) in matrix.iter().enumerate() {
        for (j, &n) in row.iter().enumerate() {
            h.extend(std::iter::repeat_n(labels[i], n));
            m.extend(std::iter::repeat_n(labels[j], n));
        }
    }
    (h, m)
}

fn kappa_oracle() -> Check {
    let cases: [(&[&[usize]], f64); 3] = [
        // p_o = 0.7, p_e = 0.5
        (&[&[20, 5], &[10, 15]], 0.4),
        // p_o = p_e = 0.5
        (&[&[1, 1], &[1, 1]], 0.0),
        // p_o = 35/50, p_e = 835/2500
        (&[&[10, 2, 3], &[4, 12, 1], &[2, 3, 13]], 61.0 / 111.0),
    ];
    for (matrix, want) in cases {
        let (h, m) = sequences(matrix);
        let report = cohen_kappa(&h, &m).map_err(|e| e.to_string())?;
        let got = report.kappa.ok_or("kappa undefined")?;
        ensure!((got - want).abs() < 1e-9, "{matrix:?}: {got} vs {want}");
    }
    let (h, _) = sequences(&[&[3, 0, 0, 0], &[0, 4, 0, 0], &[0, 0, 2, 0], &[0, 0, 0, 5]]);
    let same = cohen_kappa(&h, &h).map_err(|e| e.to_string())?.kappa;
    ensure!(same == Some(1.0), "identical sequences: {same:?}");
    Ok(())
}

// 10 ------------------------------------------------------------------------

fn confcurate(dir: &Path, args: &[&str]) -> Result<Output, String> {
    Command::new(env!("CARGO_BIN_EXE_confcurate"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| format!("spawning confcurate: {e}"))
}

fn succeed(dir: &Path, args: &[&str]) -> Check {
    let out = confcurate(dir, args)?;
    ensure!(
        out.status.success(),
        "confcurate {}: {}\n{}",
        args.join(" "),
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Every file under `root` except the stage manifest, whose entries carry
/// wall-clock timestamps.
fn snapshot(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path != root.join("dataset/manifest.jsonl") {
                let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), bytes);
            }
        }
    }
    Ok(out)
}

fn pct(n: usize, d: usize) -> String {
    format!("{:.1}", 100.0 * n as f64 / d as f64)
}

/// Every output the fixture should produce, derived from its ground truth.
struct Expected {
    table1: Value,
    files: Vec<(&'static str, String)>,
}

fn expected_outputs(fx: &FixtureCorpus) -> Expected {
    let kept: Vec<&FixturePresentation> = fx.kept().collect();
    let years = fx.years();
    let authors = || {
        kept.iter().flat_map(|p| {
            p.authors
                .iter()
                .enumerate()
                .map(move |(i, a)| (p, i == 0, a))
        })
    };
    let distinct = |f: &dyn Fn(usize) -> &'static str| -> usize {
        authors()
            .map(|(_, _, a)| f(a.person))
            .collect::<BTreeSet<_>>()
            .len()
    };
    let table1 = json!({
        "total_abstracts": kept.len(),
        "total_author_records": authors().count(),
        "unique_authors": distinct(&|p| PEOPLE[p].canonical),
        "unique_institutions": distinct(&|p| PEOPLE[p].institution),
        "unique_countries": distinct(&|p| PEOPLE[p].country),
        "years_covered": years.len(),
        "first_year": years.first(),
        "last_year": years.last(),
    });

    let total = authors().count();
    let mut by_category: BTreeMap<PositionCategory, (usize, usize)> = BTreeMap::new();
    for (_, first, a) in authors() {
        let e = by_category.entry(a.category).or_default();
        e.0 += 1;
        e.1 += usize::from(first);
    }
    let mut rows: Vec<_> = by_category.into_iter().collect();
    rows.sort_by_key(|&(cat, (n, _))| (std::cmp::Reverse(n), cat));
    let mut table2 = String::from("position,total,pct_of_total,first_author_pct,co_author_pct\n");
    for (cat, (n, first)) in rows {
        table2 += &format!(
            "{},{n},{},{},{}\n",
            cat.label(),
            pct(n, total),
            pct(first, n),
            pct(n - first, n)
        );
    }

    let mut by_country: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (_, first, a) in authors() {
        let e = by_country.entry(a.country.as_str()).or_default();
        e.0 += 1;
        e.1 += usize::from(first);
    }
    let mut rows: Vec<_> = by_country.into_iter().collect();
    rows.sort_by_key(|&(c, (n, _))| (std::cmp::Reverse(n), c));
    let mut table3 = String::from("rank,country,total,first_author_n,co_author_n\n");
    for (rank, (country, (n, first))) in rows.into_iter().take(20).enumerate() {
        table3 += &format!("{},{country},{n},{first},{}\n", rank + 1, n - first);
    }

    let in_year = |y: u16| kept.iter().filter(move |p| p.year == y);
    let mut growth = String::from("year,presentations\n");
    let labels = [
        (MethodologyLabel::Quantitative, "quantitative"),
        (MethodologyLabel::Qualitative, "qualitative"),
        (MethodologyLabel::MixedMethods, "mixed_methods"),
        (MethodologyLabel::Review, "review"),
        (MethodologyLabel::TheoreticalOther, "theoretical_other"),
    ];
    let mut methodology = String::from("year,presentations");
    for (_, name) in labels {
        methodology += &format!(",{name}_pct");
    }
    methodology.push('\n');
    let mut coauthorship = String::from(
        "year,presentations,mean_authors,median_authors,single_author_pct,four_plus_pct\n",
    );
    let mut career = String::from("year,first_authors");
    for cat in PositionCategory::ALL {
        career += &format!(",{}_pct", cat.as_str());
    }
    career.push('\n');
    let mut international = String::from(
        "year,known_country_records,international_records,international_pct,unknown_country_records\n",
    );
    for &y in &years {
        let n = in_year(y).count();
        growth += &format!("{y},{n}\n");

        methodology += &format!("{y},{n}");
        for (label, _) in labels {
            methodology += &format!(
                ",{}",
                pct(in_year(y).filter(|p| p.label() == Some(label)).count(), n)
            );
        }
        methodology.push('\n');

        let mut sizes: Vec<usize> = in_year(y).map(|p| p.authors.len()).collect();
        sizes.sort_unstable();
        let mean = sizes.iter().sum::<usize>() as f64 / n as f64;
        let median = if n % 2 == 1 {
            sizes[n / 2] as f64
        } else {
            (sizes[n / 2 - 1] + sizes[n / 2]) as f64 / 2.0
        };
        let single = sizes.iter().filter(|&&s| s == 1).count();
        let four_plus = sizes.iter().filter(|&&s| s >= 4).count();
        coauthorship += &format!(
            "{y},{n},{mean:.2},{median:.1},{},{}\n",
            pct(single, n),
            pct(four_plus, n)
        );

        let firsts: Vec<PositionCategory> = in_year(y).map(|p| p.authors[0].category).collect();
        let unknown = firsts
            .iter()
            .filter(|&&c| c == PositionCategory::Unknown)
            .count();
        if (unknown as f64) / (firsts.len() as f64) <= 0.99 {
            career += &format!("{y},{}", firsts.len());
            for cat in PositionCategory::ALL {
                career += &format!(
                    ",{}",
                    pct(firsts.iter().filter(|&&c| c == cat).count(), firsts.len())
                );
            }
            career.push('\n');
        }

        let records: Vec<&str> = in_year(y)
            .flat_map(|p| p.authors.iter().map(|a| a.country.as_str()))
            .collect();
        let abroad = records.iter().filter(|&&c| c != "USA").count();
        international += &format!(
            "{y},{},{abroad},{},0\n",
            records.len(),
            pct(abroad, records.len())
        );
    }
    Expected {
        table1,
        files: vec![
            ("reports/table2.csv", table2),
            ("reports/table3.csv", table3),
            ("figures/fig2_growth.csv", growth),
            ("figures/fig3_methodology.csv", methodology),
            ("figures/fig4_coauthorship.csv", coauthorship),
            ("figures/fig5_career_stage.csv", career),
            ("figures/fig6_international.csv", international),
        ],
    }
}

fn end_to_end_fixture() -> Check {
    let fx = FixtureCorpus::standard();
    ensure!(
        fx.kept().count() >= 30,
        "fixture has {} presentations",
        fx.kept().count()
    );
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        succeed(tmp.path(), &["fixture", dir.to_str().unwrap()])?;
    }

    let start = Instant::now();
    succeed(&a, &["run-all", "--mode", "rules"])?;
    within(start, Duration::from_secs(10))?;

    let want = expected_outputs(&fx);
    let table1: Value =
        serde_json::from_str(&read(&a.join("reports/table1.json"))?).map_err(|e| e.to_string())?;
    ensure!(
        table1 == want.table1,
        "table1.json: {table1} != {}",
        want.table1
    );
    for (file, text) in &want.files {
        let got = read(&a.join(file))?;
        ensure!(&got == text, "{file}:\n{got}\nexpected:\n{text}");
    }

    let first = snapshot(&a)?;
    succeed(&a, &["run-all", "--mode", "rules", "--force"])?;
    ensure!(snapshot(&a)? == first, "forced rerun changed the outputs");
    succeed(&b, &["run-all", "--mode", "rules"])?;
    ensure!(snapshot(&b)? == first, "run in a second directory differs");
    Ok(())
}

// 11 ------------------------------------------------------------------------

/// Rewrite one JSON line of a dataset file; returns `key_field` of that row.
fn tamper(
    path: &Path,
    row: usize,
    field: &str,
    value: Value,
    key_field: &str,
) -> Result<String, String> {
    let text = read(path)?;
    let mut lines: Vec<Value> = text
        .lines()
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    lines[row][field] = value;
    let key = lines[row][key_field]
        .as_str()
        .ok_or("missing key field")?
        .to_string();
    let body: String = lines.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(path, body).map_err(|e| e.to_string())?;
    Ok(key)
}

fn violations(dir: &Path) -> Result<(i32, Vec<(String, String)>), String> {
    let out = confcurate(dir, &["validate", "--json"])?;
    let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let found = report["violations"]
        .as_array()
        .ok_or("no violations array")?
        .iter()
        .map(|v| {
            (
                v["kind"].as_str().unwrap_or("").to_string(),
                v["key"].as_str().unwrap_or("").to_string(),
            )
        })
        .collect();
    Ok((out.status.code().unwrap_or(-1), found))
}

fn validation_harness() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let faults: [(&str, usize, &str, Value, &str, &str); 3] = [
        (
            "author_records.jsonl",
            5,
            "source_id",
            json!("pdoesnotexist000"),
            "record_key",
            "orphan_record",
        ),
        (
            "clusters.jsonl",
            2,
            "canonical_name",
            json!("Somebody Else"),
            "cluster_id",
            "bad_canonical",
        ),
        (
            "methodology.jsonl",
            0,
            "label",
            Value::Null,
            "source_id",
            "unlabeled_presentation",
        ),
    ];
    for (i, (file, row, field, value, key_field, kind)) in faults.into_iter().enumerate() {
        let dir = tmp.path().join(format!("d{i}"));
        succeed(tmp.path(), &["fixture", dir.to_str().unwrap()])?;
        succeed(&dir, &["run-all"])?;
        let (code, found) = violations(&dir)?;
        ensure!(
            code == 0 && found.is_empty(),
            "clean dataset: exit {code}, {found:?}"
        );
        let key = tamper(
            &dir.join("dataset").join(file),
            row,
            field,
            value,
            key_field,
        )?;
        let (code, found) = violations(&dir)?;
        ensure!(code == 1, "{kind}: exit code {code}");
        ensure!(
            found == vec![(kind.to_string(), key)],
            "{kind}: found {found:?}"
        );
    }
    Ok(())
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panicked".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("CAGR reproduction", cagr_reproduction),
        (
            "blocked resolution equals all-pairs resolution",
            blocked_matches_all_pairs,
        ),
        ("similarity laws", similarity_laws),
        ("restricted-surname rule", restricted_surnames),
        ("canonical name selection", canonical_selection),
        ("position taxonomy", position_taxonomy),
        ("country and state normalization", country_normalization),
        ("name normalization", name_normalization),
        ("Cohen's kappa oracle", kappa_oracle),
        ("end-to-end fixture run", end_to_end_fixture),
        ("validation harness", validation_harness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| Err(panic_message(p)));
        let elapsed = start.elapsed();
        match result {
            Ok(()) => println!("criterion {:>2}: PASS  {name} ({elapsed:.2?})", i + 1),
            Err(msg) => {
                failed += 1;
                println!(
                    "criterion {:>2}: FAIL  {name} ({elapsed:.2?}): {msg}",
                    i + 1
                );
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
