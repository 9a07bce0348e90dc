use bisym_core::phantom::{generate_phantom, phantom_suite};
use bisym_core::{
    canny, process_image, run_pipeline, CannyParams, PipelineConfig, PnmImage, SymmetryParams,
};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn stages(c: &mut Criterion) {
    let (img, _) = generate_phantom(&phantom_suite()[0].spec).unwrap();
    let homogenized = process_image(&img, &SymmetryParams::default());
    let input = PnmImage::Gray(img.clone());
    let config = PipelineConfig::default();

    c.bench_function("process_image_256", |b| {
        b.iter(|| process_image(black_box(&img), &SymmetryParams::default()))
    });
    c.bench_function("canny_256", |b| {
        b.iter(|| canny(black_box(&homogenized), &CannyParams::default()).unwrap())
    });
    c.bench_function("run_pipeline_256", |b| {
        b.iter(|| run_pipeline(black_box(&input), &config).unwrap())
    });
}

criterion_group!(benches, stages);
criterion_main!(benches);
