use corridor_planner::geometry::{Point2, Polyline, SpatialIndex, project};
fn line(points: &[(f64, f64)]) -> Polyline {
    let pts: Vec<Point2> = points.iter().map(|&(x, y)| Point2::new(x, y)).collect();
    Polyline::new(&pts).unwrap()
}
fn main() {
    use rand::{Rng, SeedableRng};
    let left = line(&[(0.0, 2.0), (8.0, 2.5), (16.0, 1.5), (24.0, 2.0)]);
    let idx = SpatialIndex::build(&left);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    for k in 0..1000 {
        let p = Point2::new(rng.gen_range(0.0..24.0), rng.gen_range(-1.2..1.2));
        let proj = project(&left, &idx, p);
        let d = p.distance(proj.foot);
        let scan = left.project_scan(p);
        let ds = p.distance(scan.foot);
        let mut best = f64::INFINITY;
        let mut s = 0.0;
        while s <= left.arc_length() {
            best = best.min(p.distance(left.point_at(s)));
            s += 1e-3;
        }
        best = best.min(p.distance(*left.points().last().unwrap()));
        if (d - best).abs() >= 1e-6 {
            println!("k={k} p=({}, {}) proj_d={d} scan_d={ds} dense={best} seg={} foot=({}, {})", p.x, p.y, proj.segment_index, proj.foot.x, proj.foot.y);
            if k > 20 { break; }
        }
    }
    println!("done");
}
