//! Mirror a point across a wall, then fold a sequence of mirrors.

use gism::geometry::{compose_projections, symmetric_project, Point, UnitVector};

fn main() -> gism::Result<()> {
    let u = Point::new2(0.3, 0.7);
    let floor = (Point::new2(0.0, 0.0), UnitVector::new2(0.0, 1.0)?);
    let east = (Point::new2(1.0, 0.0), UnitVector::new2(1.0, 0.0)?);

    let once = symmetric_project(u, floor.0, floor.1);
    let flipped = symmetric_project(u, floor.0, UnitVector::new2(0.0, -1.0)?);
    println!("mirror in floor: {:?}", once.as_slice());
    println!("with the normal flipped: {:?}", flipped.as_slice());
    println!(
        "mirror twice: {:?}",
        symmetric_project(once, floor.0, floor.1).as_slice()
    );

    let image = compose_projections(u, &[floor, east]);
    println!("floor then east wall: {:?}", image.as_slice());
    Ok(())
}
