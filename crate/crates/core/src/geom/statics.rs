use super::polygon::Vec2;
use super::{
    bretl_lall_projection, stance_generators, wrench, ContactPatch, GeomError, Polygon2, Vec3,
    Wrench,
};
use crate::lp::{LinearProgram, Sense};

/// Corner forces of one decomposition, `forces[patch][corner]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactForces {
    pub forces: Vec<[Vec3; 4]>,
}

impl ContactForces {
    pub fn total_force(&self) -> Vec3 {
        self.forces
            .iter()
            .flatten()
            .fold(Vec3::zeros(), |a, f| a + f)
    }

    pub fn net_wrench(&self, patches: &[ContactPatch], origin: &Vec3) -> Wrench {
        let mut w = Wrench::zeros();
        for (p, fs) in patches.iter().zip(&self.forces) {
            for (c, f) in p.corners().iter().zip(fs) {
                w += wrench(f, &(c - origin).cross(f));
            }
        }
        w
    }
}

/// Net contact wrench at `origin` required to give the COM at `com` the
/// acceleration `com_accel` with constant angular momentum:
/// `[m(a − g); m(p − O) × (a − g)]`.
pub fn gravity_wrench(
    mass: f64,
    com: &Vec3,
    com_accel: &Vec3,
    gravity: &Vec3,
    origin: &Vec3,
) -> Wrench {
    let f = (com_accel - gravity) * mass;
    wrench(&f, &(com - origin).cross(&f))
}

/// Find corner forces inside the linearized friction pyramids whose net
/// wrench at `origin` equals `w`. Among feasible decompositions the one with
/// least total normal force is returned.
pub fn feasible_contact_forces(
    patches: &[ContactPatch],
    w: &Wrench,
    origin: &Vec3,
) -> Result<ContactForces, GeomError> {
    let scale = w.norm();
    if scale <= 1e-12 {
        return Ok(ContactForces {
            forces: vec![[Vec3::zeros(); 4]; patches.len()],
        });
    }
    let gens = stance_generators(patches, origin);
    let target = w / scale;
    let mut lp = LinearProgram::minimize(vec![1.0; gens.len()]);
    for k in 0..6 {
        lp.add_row(gens.iter().map(|g| g[k]).collect(), Sense::Eq, target[k]);
    }
    let sol = lp.solve().map_err(|_| GeomError::Infeasible)?;
    let mut forces = Vec::with_capacity(patches.len());
    let mut it = sol.x.iter();
    for p in patches {
        let edges = p.pyramid_edges();
        let mut corner_forces = [Vec3::zeros(); 4];
        for cf in corner_forces.iter_mut() {
            for e in &edges {
                *cf += e * (*it.next().unwrap() * scale);
            }
        }
        forces.push(corner_forces);
    }
    Ok(ContactForces { forces })
}

/// Horizontal cross-section of the static-equilibrium prism: COM positions
/// where gravity alone can be balanced by feasible contact forces. Gravity is
/// expected to be vertical.
pub fn static_equilibrium_polygon(
    patches: &[ContactPatch],
    mass: f64,
    gravity: &Vec3,
) -> Result<Polygon2, GeomError> {
    if !(mass > 0.0) || gravity.norm() <= 0.0 {
        return Err(GeomError::InfeasibleSet);
    }
    let origin = patches.iter().fold(Vec3::zeros(), |a, p| a + p.center) / patches.len() as f64;
    let gens = stance_generators(patches, &origin);
    let n = gens.len();
    // unit gravity: mass and |g| cancel from the cone condition
    let g = gravity / gravity.norm();
    let force = -g;
    let tx = -Vec3::x().cross(&g);
    let ty = -Vec3::y().cross(&g);
    let oracle = |d: Vec2| {
        let mut obj = vec![0.0; n + 2];
        obj[n] = d.x;
        obj[n + 1] = d.y;
        let mut lp = LinearProgram::maximize(obj);
        lp.set_free(n).set_free(n + 1);
        for k in 0..6 {
            let mut row: Vec<f64> = gens.iter().map(|g| g[k]).collect();
            let (rhs, cx, cy) = if k < 3 {
                (force[k], 0.0, 0.0)
            } else {
                (0.0, tx[k - 3], ty[k - 3])
            };
            row.push(-cx);
            row.push(-cy);
            lp.add_row(row, Sense::Eq, rhs);
        }
        lp.solve().ok().map(|s| Vec2::new(s.x[n], s.x[n + 1]))
    };
    let poly = bretl_lall_projection(oracle, 1e-10)?;
    Ok(poly.translated(&Vec2::new(origin.x, origin.y)))
}
