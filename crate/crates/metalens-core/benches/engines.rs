//! Engine and threading comparisons for the spatially varying convolution.
//!
//! With the default `parallel` feature the direct and tiled engines run on
//! the global rayon pool; the `single-thread` groups rerun them inside a
//! one-worker pool to expose the parallel speedup. Building the bench with
//! `--no-default-features` measures the plain sequential fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use metalens_core::boundary::BoundaryRule;
use metalens_core::convolve::{sv_convolve, Engine};
use metalens_core::psf::PsfGrid;
use metalens_core::synthetic::{make_psf_grid, test_scene, PsfGridSpec, PsfKind};
use metalens_core::Image;

fn fixture(size: usize, kernel_k: usize) -> (Image, PsfGrid) {
    let scene = test_scene(size, size, 42);
    let grid = make_psf_grid(
        &PsfKind::GaussianRamp {
            sigma_center: 0.6,
            sigma_edge: 1.4,
        },
        &PsfGridSpec {
            grid_h: 3,
            grid_w: 3,
            kernel_k,
            channels: 1,
            image_w: size,
            image_h: size,
            chroma_scale: vec![],
        },
    )
    .unwrap();
    (scene, grid)
}

fn bench_engines(c: &mut Criterion) {
    let mut group = c.benchmark_group("sv_convolve");
    for &(size, k) in &[(128usize, 7usize), (128, 15), (256, 7)] {
        let (scene, grid) = fixture(size, k);
        for engine in [Engine::Direct, Engine::Tiled] {
            group.bench_with_input(
                BenchmarkId::new(format!("{engine}"), format!("{size}px_k{k}")),
                &(&scene, &grid),
                |b, (scene, grid)| {
                    b.iter(|| {
                        sv_convolve(scene, *grid, BoundaryRule::Replicate, engine).unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

#[cfg(feature = "parallel")]
fn bench_single_thread(c: &mut Criterion) {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let mut group = c.benchmark_group("sv_convolve_single_thread");
    let (scene, grid) = fixture(128, 15);
    for engine in [Engine::Direct, Engine::Tiled] {
        group.bench_with_input(
            BenchmarkId::new(format!("{engine}"), "128px_k15"),
            &(&scene, &grid),
            |b, (scene, grid)| {
                b.iter(|| {
                    pool.install(|| {
                        sv_convolve(scene, *grid, BoundaryRule::Replicate, engine).unwrap()
                    })
                })
            },
        );
    }
    group.finish();
}

#[cfg(not(feature = "parallel"))]
fn bench_single_thread(_c: &mut Criterion) {}

criterion_group!(benches, bench_engines, bench_single_thread);
criterion_main!(benches);
