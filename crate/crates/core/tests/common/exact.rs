//! Exact solution of the one-dimensional Riemann problem for a polytropic
//! gas (two-rarefaction/two-shock pressure function solved by Newton).

use hllstab::euler::PrimitiveState;

pub struct ExactRiemann {
    l: PrimitiveState,
    r: PrimitiveState,
    gamma: f64,
    al: f64,
    ar: f64,
    pub p_star: f64,
    pub u_star: f64,
}

impl ExactRiemann {
    pub fn new(l: PrimitiveState, r: PrimitiveState, gamma: f64) -> Self {
        let al = (gamma * l.p / l.rho).sqrt();
        let ar = (gamma * r.p / r.rho).sqrt();
        let mut s = Self { l, r, gamma, al, ar, p_star: 0.0, u_star: 0.0 };
        // two-rarefaction guess, then Newton on f_L + f_R + du = 0
        let z = (gamma - 1.0) / (2.0 * gamma);
        let mut p = ((al + ar - 0.5 * (gamma - 1.0) * (r.u - l.u)) / (al / l.p.powf(z) + ar / r.p.powf(z))).powf(1.0 / z);
        for _ in 0..100 {
            let (fl, dl) = s.f(p, &l, al);
            let (fr, dr) = s.f(p, &r, ar);
            let next = (p - (fl + fr + r.u - l.u) / (dl + dr)).max(1e-14);
            let done = (next - p).abs() <= 1e-15 * (next + p);
            p = next;
            if done {
                break;
            }
        }
        let (fl, _) = s.f(p, &l, al);
        let (fr, _) = s.f(p, &r, ar);
        s.p_star = p;
        s.u_star = 0.5 * (l.u + r.u) + 0.5 * (fr - fl);
        s
    }

    fn f(&self, p: f64, k: &PrimitiveState, a: f64) -> (f64, f64) {
        let g = self.gamma;
        if p > k.p {
            let ak = 2.0 / ((g + 1.0) * k.rho);
            let bk = (g - 1.0) / (g + 1.0) * k.p;
            let q = (ak / (p + bk)).sqrt();
            ((p - k.p) * q, q * (1.0 - 0.5 * (p - k.p) / (bk + p)))
        } else {
            let e = (g - 1.0) / (2.0 * g);
            let f = 2.0 * a / (g - 1.0) * ((p / k.p).powf(e) - 1.0);
            (f, (p / k.p).powf(-(g + 1.0) / (2.0 * g)) / (k.rho * a))
        }
    }

    /// State at similarity coordinate `s = x / t`.
    pub fn sample(&self, s: f64) -> PrimitiveState {
        let g = self.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        let gm = (g - 1.0) / (g + 1.0);
        if s <= us {
            let (l, al) = (self.l, self.al);
            if ps > l.p {
                let sl = l.u - al * ((g + 1.0) / (2.0 * g) * ps / l.p + (g - 1.0) / (2.0 * g)).sqrt();
                if s <= sl {
                    l
                } else {
                    let rho = l.rho * (ps / l.p + gm) / (gm * ps / l.p + 1.0);
                    PrimitiveState::new(rho, us, 0.0, ps)
                }
            } else {
                let head = l.u - al;
                let a_star = al * (ps / l.p).powf((g - 1.0) / (2.0 * g));
                let tail = us - a_star;
                if s <= head {
                    l
                } else if s >= tail {
                    PrimitiveState::new(l.rho * (ps / l.p).powf(1.0 / g), us, 0.0, ps)
                } else {
                    let c = 2.0 / (g + 1.0) + gm / al * (l.u - s);
                    let rho = l.rho * c.powf(2.0 / (g - 1.0));
                    let u = 2.0 / (g + 1.0) * (al + 0.5 * (g - 1.0) * l.u + s);
                    PrimitiveState::new(rho, u, 0.0, l.p * c.powf(2.0 * g / (g - 1.0)))
                }
            }
        } else {
            let (r, ar) = (self.r, self.ar);
            if ps > r.p {
                let sr = r.u + ar * ((g + 1.0) / (2.0 * g) * ps / r.p + (g - 1.0) / (2.0 * g)).sqrt();
                if s >= sr {
                    r
                } else {
                    let rho = r.rho * (ps / r.p + gm) / (gm * ps / r.p + 1.0);
                    PrimitiveState::new(rho, us, 0.0, ps)
                }
            } else {
                let head = r.u + ar;
                let a_star = ar * (ps / r.p).powf((g - 1.0) / (2.0 * g));
                let tail = us + a_star;
                if s >= head {
                    r
                } else if s <= tail {
                    PrimitiveState::new(r.rho * (ps / r.p).powf(1.0 / g), us, 0.0, ps)
                } else {
                    let c = 2.0 / (g + 1.0) - gm / ar * (r.u - s);
                    let rho = r.rho * c.powf(2.0 / (g - 1.0));
                    let u = 2.0 / (g + 1.0) * (-ar + 0.5 * (g - 1.0) * r.u + s);
                    PrimitiveState::new(rho, u, 0.0, r.p * c.powf(2.0 * g / (g - 1.0)))
                }
            }
        }
    }
}
