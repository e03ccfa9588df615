use criterion::{black_box, criterion_group, criterion_main, Criterion};

use silvertree::names::{force_long_prefix, RealName};
use silvertree::strings::BitString;
use silvertree::suites::{lsys_suite, SuiteParams};
use silvertree::systems::{FusionChain, MultiSystem, SplitSystem};
use silvertree::trees::SilverPattern;

fn pattern_algebra(c: &mut Criterion) {
    let tree: SilverPattern = "0*1*0".parse().unwrap();
    let parts: Vec<SilverPattern> = ["0*1", "0*0*1", "1"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    c.bench_function("subset_of_union depth 8", |b| {
        b.iter(|| black_box(&tree).subset_of_union(black_box(&parts)))
    });
    let sigma: BitString = "10110".parse().unwrap();
    c.bench_function("act and restrict", |b| {
        b.iter(|| {
            let acted = black_box(&tree).act(&sigma);
            acted.restrict(&acted.stem()).unwrap()
        })
    });
}

fn system_growth(c: &mut Criterion) {
    let seed: SilverPattern = "0*".parse().unwrap();
    c.bench_function("extend to height 6", |b| {
        b.iter(|| {
            let mut sys = SplitSystem::seed(black_box(&seed).clone());
            for _ in 0..5 {
                sys = sys.extend();
            }
            sys
        })
    });
}

fn fusion_queries(c: &mut Criterion) {
    let mut chain = FusionChain::new(MultiSystem::empty());
    chain.step_seed(0, "0".parse().unwrap()).unwrap();
    for _ in 0..5 {
        chain.step_extend(0).unwrap();
    }
    let probe: BitString = "01011".parse().unwrap();
    c.bench_function("fusion membership", |b| {
        b.iter(|| {
            chain
                .fusion_member(0, &BitString::empty(), black_box(&probe))
                .unwrap()
        })
    });
}

fn forcing(c: &mut Criterion) {
    let canonical = RealName::canonical(8);
    let full = SilverPattern::full();
    c.bench_function("force 8 digits", |b| {
        b.iter(|| force_long_prefix(black_box(&full), &canonical, 8, &[]).unwrap())
    });
}

fn verification(c: &mut Criterion) {
    let params = SuiteParams {
        cases: 20,
        ..SuiteParams::default()
    };
    c.bench_function("lsys suite, 20 systems", |b| {
        b.iter(|| lsys_suite(black_box(&params)))
    });
}

criterion_group!(
    benches,
    pattern_algebra,
    system_growth,
    fusion_queries,
    forcing,
    verification
);
criterion_main!(benches);
