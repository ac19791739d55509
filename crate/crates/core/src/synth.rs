//! Deterministic synthetic scenes: planted faces, lip close-ups and scripted
//! talking-mouth clips with known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::face::{FaceBox, FACE_SIDE, SCALE_FACTOR};
use crate::features::WordGroup;
use crate::imaging::{BinaryImage, RgbImage};

pub const FRAME_WIDTH: usize = 320;
pub const FRAME_HEIGHT: usize = 240;

/// Light, medium, tan and dark skin.
pub const SKIN_TONES: [[u8; 3]; 4] = [[225, 185, 160], [200, 150, 115], [170, 115, 80], [130, 85, 60]];

/// A lip colour that suits `skin`: redder and darker.
pub fn lip_colour(skin: [u8; 3]) -> [u8; 3] {
    lip_colour_with_contrast(skin, 1.0)
}

/// Lip colour between `skin` (contrast 0) and the strong default (1).
pub fn lip_colour_with_contrast(skin: [u8; 3], contrast: f64) -> [u8; 3] {
    let factors = [0.5, 0.18, 0.25];
    let mut out = [0u8; 3];
    for c in 0..3 {
        let f = 1.0 - contrast * (1.0 - factors[c]);
        out[c] = (skin[c] as f64 * f) as u8;
    }
    out
}

fn jitter(rng: &mut ChaCha8Rng, p: [u8; 3], amp: f64) -> [u8; 3] {
    if amp <= 0.0 {
        return p;
    }
    p.map(|c| (c as f64 + rng.gen_range(-amp..=amp)).round().clamp(0.0, 255.0) as u8)
}

fn in_ellipse(x: f64, y: f64, cx: f64, cy: f64, a: f64, b: f64) -> bool {
    if a <= 0.0 || b <= 0.0 {
        return false;
    }
    let dx = (x - cx) / a;
    let dy = (y - cy) / b;
    dx * dx + dy * dy <= 1.0
}

/// A mouth drawn as an outer lip ellipse with a darker opening inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mouth {
    /// Centre relative to the face box.
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    /// Outer height including the opening.
    pub height: f64,
    /// Height of the dark inner opening.
    pub opening: f64,
}

impl Mouth {
    pub fn closed(width: f64, height: f64) -> Self {
        Self {
            cx: FACE_SIDE as f64 / 2.0,
            cy: 88.0,
            width,
            height,
            opening: 0.0,
        }
    }

    /// Lip colour at face-relative `(x, y)` (pixel centre), if inside.
    fn paint(&self, x: f64, y: f64, lip: [u8; 3]) -> Option<[u8; 3]> {
        if !in_ellipse(x, y, self.cx, self.cy, self.width / 2.0, self.height / 2.0) {
            return None;
        }
        if in_ellipse(x, y, self.cx, self.cy, self.width * 0.35, self.opening / 2.0) {
            return Some(lip.map(|c| (c as f64 * 0.55) as u8));
        }
        Some(lip)
    }
}

/// A 320x240 frame with one 104x104 face on a textured background.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceScene {
    pub face_x: usize,
    pub face_y: usize,
    pub skin: [u8; 3],
    pub lip: [u8; 3],
    pub mouth: Mouth,
    /// Per-channel uniform noise amplitude on the face.
    pub noise: f64,
    pub seed: u64,
}

impl FaceScene {
    pub fn new(face_x: usize, face_y: usize, skin: [u8; 3], seed: u64) -> Self {
        Self {
            face_x,
            face_y,
            skin,
            lip: lip_colour(skin),
            mouth: Mouth::closed(56.0, 18.0),
            noise: 3.0,
            seed,
        }
    }

    /// Random placement and skin tone; the face stays fully inside the frame.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rng.gen_range(0..=FRAME_WIDTH - FACE_SIDE);
        let y = rng.gen_range(0..=FRAME_HEIGHT - FACE_SIDE);
        let skin = SKIN_TONES[rng.gen_range(0..SKIN_TONES.len())];
        Self::new(x, y, skin, seed)
    }

    pub fn face_box(&self) -> FaceBox {
        FaceBox::new(self.face_x, self.face_y, FACE_SIDE, FACE_SIDE)
    }

    pub fn render(&self) -> RgbImage {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_f00d);
        let mut img = background(&mut rng);
        let cell = FACE_SIDE as f64 / 13.0;
        let feature = self.skin.map(|c| (c as f64 * 0.2) as u8);
        for fy in 0..FACE_SIDE {
            for fx in 0..FACE_SIDE {
                let (x, y) = (self.face_x + fx, self.face_y + fy);
                let (px, py) = (fx as f64 + 0.5, fy as f64 + 0.5);
                let (cx, cy) = (px / cell, py / cell);
                let eye_l = in_ellipse(cx, cy, 3.0, 2.6, 2.2, 1.7);
                let eye_r = in_ellipse(cx, cy, 10.0, 2.6, 2.2, 1.7);
                let nose = in_ellipse(cx, cy, 6.5, 8.1, 1.8, 1.3);
                let base = if let Some(c) = self.mouth.paint(px, py, self.lip) {
                    c
                } else if eye_l || eye_r || nose {
                    feature
                } else {
                    self.skin
                };
                img.set(x, y, jitter(&mut rng, base, self.noise));
            }
        }
        img
    }

    /// Ground-truth lip mask over the bottom third of the face box.
    pub fn lip_truth(&self) -> BinaryImage {
        let third = FACE_SIDE / 3;
        let top = FACE_SIDE - third;
        BinaryImage::from_fn(FACE_SIDE, third, |x, y| {
            in_ellipse(
                x as f64 + 0.5,
                (y + top) as f64 + 0.5,
                self.mouth.cx,
                self.mouth.cy,
                self.mouth.width / 2.0,
                self.mouth.height / 2.0,
            )
        })
        .expect("non-empty")
    }
}

/// Cool grey-blue clutter: blocks of random shade plus pixel noise, never
/// passing the skin rule.
fn background(rng: &mut ChaCha8Rng) -> RgbImage {
    let block = 6;
    let bw = FRAME_WIDTH.div_ceil(block);
    let bh = FRAME_HEIGHT.div_ceil(block);
    let shades: Vec<f64> = (0..bw * bh).map(|_| rng.gen_range(30.0..140.0)).collect();
    let mut img = RgbImage::new(FRAME_WIDTH, FRAME_HEIGHT, [0; 3]).expect("non-empty");
    for y in 0..FRAME_HEIGHT {
        for x in 0..FRAME_WIDTH {
            let s = shades[(y / block) * bw + x / block] + rng.gen_range(-8.0..8.0);
            let g = s.clamp(0.0, 255.0);
            img.set(x, y, [(g * 0.8) as u8, (g * 0.9) as u8, g.min(255.0) as u8]);
        }
    }
    img
}

/// A close-up lip region (the bottom third of a face) with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LipScene {
    pub width: usize,
    pub height: usize,
    pub skin: [u8; 3],
    pub lip: [u8; 3],
    pub mouth: Mouth,
    pub noise: f64,
    /// Brightness change from the top row to the bottom row, as a factor.
    pub shading: f64,
    /// Strength of the skin crease shadow below the lower lip, 0 for none.
    pub crease: f64,
    /// Fraction of non-lip pixels covered by dark hair stubble.
    pub stubble: f64,
    pub seed: u64,
}

impl LipScene {
    /// Scene `index` of a parameterized family cycling through the skin tones
    /// with varying mouth size, opening and position.
    pub fn family(index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(0x11b5 + index as u64);
        let skin = SKIN_TONES[index % SKIN_TONES.len()];
        let width = 104;
        let height = 34;
        let mw = rng.gen_range(36.0..64.0);
        let mh = rng.gen_range(10.0..22.0);
        let opening = if rng.gen_bool(0.5) {
            rng.gen_range(2.0..mh * 0.5)
        } else {
            0.0
        };
        let mouth = Mouth {
            cx: width as f64 / 2.0 + rng.gen_range(-8.0..8.0),
            cy: height as f64 / 2.0 + rng.gen_range(-3.0..3.0),
            width: mw,
            height: mh,
            opening,
        };
        Self {
            width,
            height,
            skin,
            lip: lip_colour_with_contrast(skin, rng.gen_range(0.6..1.0)),
            mouth,
            noise: 3.0,
            shading: rng.gen_range(-0.2..0.2),
            crease: rng.gen_range(0.1..0.3),
            stubble: rng.gen_range(0.0..0.2),
            seed: index as u64,
        }
    }

    pub fn render(&self) -> (RgbImage, BinaryImage) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x0dd_ba11);
        let mut img = RgbImage::new(self.width, self.height, self.skin).expect("non-empty");
        let mut truth = BinaryImage::new(self.width, self.height, 0).expect("non-empty");
        for y in 0..self.height {
            for x in 0..self.width {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let base = match self.mouth.paint(px, py, self.lip) {
                    Some(c) => {
                        truth.set(x, y, 1);
                        c
                    }
                    None => {
                        // soft shadow in the fold under the lower lip
                        let below = py - (self.mouth.cy + self.mouth.height / 2.0 + 2.0);
                        let dx = (px - self.mouth.cx) / (self.mouth.width * 0.4);
                        let fold = (-(below * below) / 4.0 - dx * dx).exp();
                        self.skin.map(|c| (c as f64 * (1.0 - self.crease * fold)) as u8)
                    }
                };
                let light = 1.0 + self.shading * (py / self.height as f64 - 0.5);
                let hair = truth.get(x, y) == 0 && self.stubble > 0.0 && rng.gen_bool(self.stubble.min(1.0));
                let base = if hair {
                    base.map(|c| (c as f64 * 0.35) as u8)
                } else {
                    base
                };
                let lit = base.map(|c| (c as f64 * light).clamp(0.0, 255.0) as u8);
                img.set(x, y, jitter(&mut rng, lit, self.noise));
            }
        }
        (img, truth)
    }
}

/// Vocabulary of the scripted corpus with each word's group.
pub const VOCABULARY: [(&str, WordGroup); 5] = [
    ("one", WordGroup::Nu),
    ("two", WordGroup::Nu),
    ("bomb", WordGroup::Sec),
    ("attack", WordGroup::Sec),
    ("hello", WordGroup::Lg),
];

/// Mouth height at rest, in pixels.
pub const REST_HEIGHT: f64 = 10.0;
/// Vertical mouth centre in the middle of the face's lower third, so the
/// widest aperture stays inside it when the face box is off by one cell.
pub const MOUTH_CY: f64 = 87.0;
/// Mouth width at rest, in pixels.
pub const REST_WIDTH: f64 = 52.0;

/// Mouth (width, height) of `word` at phase `u` in `[0, 1]`.
pub fn word_shape(word: usize, u: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    let (dw, dh) = match word % VOCABULARY.len() {
        0 => (0.0, 8.0 * (PI * u).sin()),
        1 => (-6.0, 8.0 * (2.0 * PI * u).sin().abs()),
        2 => (-10.0 * (PI * u).sin(), 4.0 * (PI * u).sin()),
        3 => (14.0 * (PI * u).sin(), 2.0 * (PI * u).sin()),
        _ => (8.0, 6.0 * (3.0 * PI * u).sin().abs()),
    };
    (REST_WIDTH + dw, REST_HEIGHT + dh)
}

/// A spoken word inside a clip: its script and where it sits.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedWord {
    pub word: usize,
    pub repetition: u32,
    pub start: usize,
    pub end: usize,
    /// Outer mouth height per frame of `start..=end`.
    pub heights: Vec<f64>,
}

/// A speaker's clip: rest frames, then words separated by rest frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TalkingClip {
    pub speaker: String,
    pub session: u8,
    pub scene: FaceScene,
    pub mouths: Vec<Mouth>,
    pub words: Vec<ScriptedWord>,
}

/// Frames between words; more than the default annotation lead.
pub const REST_FRAMES: usize = 4;
/// Nominal frames per word before jitter.
pub const WORD_FRAMES: usize = 14;

impl TalkingClip {
    /// Every vocabulary word `repetitions` times, word-major. Word lengths
    /// vary by one frame and mouth shapes carry sub-pixel noise.
    pub fn scripted(speaker_index: usize, session: u8, repetitions: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((speaker_index as u64) << 32) ^ session as u64);
        let mut scene = FaceScene::random(seed.wrapping_add(speaker_index as u64 * 7919));
        // a seated speaker on the 8-pixel analysis grid
        scene.face_x -= scene.face_x % SCALE_FACTOR;
        scene.face_y -= scene.face_y % SCALE_FACTOR;
        scene.skin = SKIN_TONES[speaker_index % SKIN_TONES.len()];
        scene.lip = lip_colour(scene.skin);
        let rest = Mouth {
            cy: MOUTH_CY,
            ..Mouth::closed(REST_WIDTH, REST_HEIGHT)
        };
        let mut mouths = vec![rest; REST_FRAMES];
        let mut words = Vec::new();
        for word in 0..VOCABULARY.len() {
            for repetition in 0..repetitions {
                let n = (WORD_FRAMES as i64 + rng.gen_range(-1..=1)) as usize;
                let start = mouths.len();
                let mut heights = Vec::with_capacity(n);
                for i in 0..n {
                    let (w, h) = word_shape(word, i as f64 / (n - 1) as f64);
                    let (w, h) = (w + rng.gen_range(-0.5..0.5), h + rng.gen_range(-0.3..0.3));
                    let mut m = Mouth {
                        cy: MOUTH_CY,
                        ..Mouth::closed(w, h)
                    };
                    m.opening = (h - REST_HEIGHT - 2.0).max(0.0);
                    heights.push(h);
                    mouths.push(m);
                }
                words.push(ScriptedWord {
                    word,
                    repetition,
                    start,
                    end: start + n - 1,
                    heights,
                });
                mouths.extend(std::iter::repeat_n(rest, REST_FRAMES));
            }
        }
        Self {
            speaker: format!("s{:02}", speaker_index + 1),
            session,
            scene,
            mouths,
            words,
        }
    }

    pub fn len(&self) -> usize {
        self.mouths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mouths.is_empty()
    }

    pub fn render_frame(&self, index: usize) -> RgbImage {
        let mut scene = self.scene.clone();
        scene.mouth = self.mouths[index];
        scene.seed = self.scene.seed.wrapping_mul(31).wrapping_add(index as u64);
        scene.render()
    }

    /// `label,start,end,speaker,session,repetition,group` lines.
    pub fn annotations(&self) -> String {
        let mut out = String::from("# label,start,end,speaker,session,repetition,group\n");
        for w in &self.words {
            let (label, group) = VOCABULARY[w.word];
            out.push_str(&format!(
                "{label},{},{},{},{},{},{group}\n",
                w.start, w.end, self.speaker, self.session, w.repetition
            ));
        }
        out
    }
}
