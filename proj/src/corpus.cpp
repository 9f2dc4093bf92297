#include "vcd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vcd/image_ops.hpp"
#include "vcd/parallel.hpp"
#include "vcd/rng.hpp"

namespace vcd::eval {
namespace {

double lattice(std::uint64_t seed, int octave, long ix, long iy) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(octave) * 0x9E37ULL ^
                                                       splitmix64(static_cast<std::uint64_t>(ix) * 0x85EBCA6BULL ^
                                                                  static_cast<std::uint64_t>(iy))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, int octave, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const long ix = static_cast<long>(fx);
  const long iy = static_cast<long>(fy);
  const double ax = smooth(x - fx);
  const double ay = smooth(y - fy);
  const double a = lattice(seed, octave, ix, iy);
  const double b = lattice(seed, octave, ix + 1, iy);
  const double c = lattice(seed, octave, ix, iy + 1);
  const double d = lattice(seed, octave, ix + 1, iy + 1);
  return (1 - ay) * ((1 - ax) * a + ax * b) + ay * ((1 - ax) * c + ax * d);
}

std::string make_id(char prefix, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%05d", prefix, index);
  return buf;
}

// Frames of a reference texture over [start, start + duration).
std::vector<Frame> render_clip(const TextureParams& tex, int w, int h, double fps, double start,
                               double duration) {
  std::vector<Frame> frames;
  const int n = static_cast<int>(std::round(duration * fps));
  frames.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) frames.push_back(render_texture(tex, w, h, start + i / fps));
  return frames;
}

// Picks a segment start so that [start, start + query) lies inside the reference.
double segment_start(Rng& rng, const CorpusConfig& c) {
  const double slack = std::max(0.0, c.reference_duration_s - c.query_duration_s);
  const int steps = static_cast<int>(std::floor(slack * c.fps));
  return std::uniform_int_distribution<int>(0, steps)(rng) / c.fps;
}

scene::SceneLayout random_layout(Rng& rng, const CorpusConfig& c) {
  auto pos = [&](int dim) {
    return static_cast<int>(std::round(uniform(rng, c.split_min_fraction, c.split_max_fraction) * dim));
  };
  scene::SceneLayout layout;
  if (uniform(rng, 0.0, 1.0) < c.four_scene_probability) {
    layout.kind = scene::LayoutKind::Grid;
    layout.x = pos(c.width);
    layout.y = pos(c.height);
  } else if (uniform(rng, 0.0, 1.0) < 0.5) {
    layout.kind = scene::LayoutKind::VSplit;
    layout.x = pos(c.width);
  } else {
    layout.kind = scene::LayoutKind::HSplit;
    layout.y = pos(c.height);
  }
  return layout;
}

struct Tile {
  int x0, y0, w, h;
};

std::vector<Tile> tiles_of(const scene::SceneLayout& layout, int w, int h) {
  std::vector<std::pair<int, int>> cols = {{0, w}};
  std::vector<std::pair<int, int>> rows = {{0, h}};
  if (layout.kind == scene::LayoutKind::VSplit || layout.kind == scene::LayoutKind::Grid) {
    cols = {{0, layout.x}, {layout.x, w - layout.x}};
  }
  if (layout.kind == scene::LayoutKind::HSplit || layout.kind == scene::LayoutKind::Grid) {
    rows = {{0, layout.y}, {layout.y, h - layout.y}};
  }
  std::vector<Tile> out;
  for (const auto& [y0, th] : rows) {
    for (const auto& [x0, tw] : cols) out.push_back({x0, y0, tw, th});
  }
  return out;
}

// Stacks edited clips of the given textures into one video.
std::vector<Frame> stack_clips(const std::vector<TextureParams>& textures,
                               const std::vector<double>& starts, const std::vector<EditParams>& edits,
                               const scene::SceneLayout& layout, const CorpusConfig& c) {
  const auto tiles = tiles_of(layout, c.width, c.height);
  const int n = static_cast<int>(std::round(c.query_duration_s * c.fps));
  std::vector<Frame> frames;
  for (int i = 0; i < n; ++i) {
    Frame canvas(c.width, c.height);
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      const Frame src = apply_edit(render_texture(textures[t], c.width, c.height, starts[t] + i / c.fps), edits[t]);
      image::paste(canvas, image::resample(src, 0, 0, c.width, c.height, tiles[t].w, tiles[t].h),
                   tiles[t].x0, tiles[t].y0);
    }
    frames.push_back(std::move(canvas));
  }
  return frames;
}

}  // namespace

TextureParams random_texture(std::uint64_t seed, bool high_texture) {
  Rng rng(seed);
  TextureParams p;
  p.seed = splitmix64(seed);
  p.octave_weights[0] = uniform(rng, 0.7, 1.0);
  p.octave_weights[1] = uniform(rng, 0.3, 0.6);
  p.octave_weights[2] = uniform(rng, 0.25, 0.45);
  p.cell_fraction[0] = uniform(rng, 0.25, 0.42);
  p.cell_fraction[1] = uniform(rng, 0.12, 0.2);
  p.cell_fraction[2] = uniform(rng, 0.04, 0.06);
  if (high_texture) {
    p.octave_weights[2] = uniform(rng, 0.9, 1.3);
    p.cell_fraction[2] = uniform(rng, 0.02, 0.035);
  }
  p.contrast = uniform(rng, 1.2, 1.8);
  for (double& a : p.octave_angle) a = uniform(rng, 0.0, std::numbers::pi / 2.0);
  const double speed = uniform(rng, 2.0, 8.0);
  const double dir = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  p.drift_x = speed * std::cos(dir);
  p.drift_y = speed * std::sin(dir);
  p.overlay_amplitude = uniform(rng, 0.05, 0.15);
  p.overlay_angle = uniform(rng, 0.0, std::numbers::pi);
  p.overlay_frequency = uniform(rng, 0.5, 1.5);
  p.overlay_speed = uniform(rng, 0.05, 0.2);
  return p;
}

Frame render_texture(const TextureParams& p, int width, int height, double t) {
  Frame f(width, height);
  const double wsum = p.octave_weights[0] + p.octave_weights[1] + p.octave_weights[2];
  const double ox = std::cos(p.overlay_angle);
  const double oy = std::sin(p.overlay_angle);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double px = x + p.drift_x * t;
      const double py = y + p.drift_y * t;
      double n = 0.0;
      for (int o = 0; o < 3; ++o) {
        const double cell = p.cell_fraction[o] * width;
        const double c = std::cos(p.octave_angle[o]);
        const double s = std::sin(p.octave_angle[o]);
        n += p.octave_weights[o] * (value_noise(p.seed, o, (c * px - s * py) / cell, (s * px + c * py) / cell) - 0.5);
      }
      n /= wsum;
      const double phase = p.overlay_frequency * (ox * x + oy * y) / width + p.overlay_speed * t;
      const double v = 2.0 * p.contrast * n + p.overlay_amplitude * std::sin(2.0 * std::numbers::pi * phase);
      f.at(x, y) = static_cast<float>(0.5 + 0.45 * std::tanh(v / 0.45));
    }
  }
  return f;
}

EditParams random_edit(std::uint64_t seed, const EditChainConfig& c) {
  Rng rng(seed);
  EditParams e;
  e.crop = uniform(rng, c.crop_min, c.crop_max);
  e.crop_x = uniform(rng, 0.0, 1.0);
  e.crop_y = uniform(rng, 0.0, 1.0);
  e.brightness = uniform(rng, -c.brightness, c.brightness);
  e.blur = std::uniform_int_distribution<int>(c.blur_min, c.blur_max)(rng);
  e.rotation = uniform(rng, -c.rotation_deg, c.rotation_deg);
  return e;
}

Frame apply_edit(const Frame& frame, const EditParams& e) {
  // crop is the kept area fraction
  const double side = std::sqrt(e.crop);
  const double cw = side * frame.width;
  const double ch = side * frame.height;
  Frame out = image::resample(frame, e.crop_x * (frame.width - cw), e.crop_y * (frame.height - ch), cw,
                              ch, frame.width, frame.height);
  out = image::adjust_brightness(out, e.brightness);
  out = image::box_blur(out, e.blur);
  if (e.rotation != 0.0) out = image::rotate(out, e.rotation);
  return out;
}

std::string to_string(Role role) {
  switch (role) {
    case Role::Reference: return "reference";
    case Role::Positive: return "positive";
    case Role::Stacked: return "stacked";
    case Role::Distractor: return "distractor";
    case Role::Background: return "background";
  }
  return "reference";
}

Role role_from_string(const std::string& s) {
  for (const Role r : {Role::Reference, Role::Positive, Role::Stacked, Role::Distractor, Role::Background}) {
    if (to_string(r) == s) return r;
  }
  throw std::invalid_argument("unknown role '" + s + "'");
}

void validate(const CorpusConfig& c) {
  if (c.references < 0 || c.positives < 0 || c.distractors < 0 || c.stacked < 0 || c.background < 0) {
    throw std::invalid_argument("corpus counts must be >= 0");
  }
  if ((c.positives > 0 || c.stacked > 0) && c.references == 0) {
    throw std::invalid_argument("queries copying references need at least one reference video");
  }
  if (c.stacked > 0 && c.references < 4) {
    throw std::invalid_argument("stacked queries need at least 4 reference videos");
  }
  if (c.width < 16 || c.height < 16) throw std::invalid_argument("frames must be at least 16x16");
  if (!(c.fps > 0) || !(c.reference_duration_s > 0) || !(c.query_duration_s > 0) ||
      !(c.distractor_duration_s > 0)) {
    throw std::invalid_argument("frame rate and durations must be positive");
  }
  if (!(c.four_scene_probability >= 0.0 && c.four_scene_probability <= 1.0)) {
    throw std::invalid_argument("four_scene_probability must lie in [0,1]");
  }
  if (!(c.split_min_fraction > 0.0 && c.split_min_fraction <= c.split_max_fraction &&
        c.split_max_fraction < 1.0)) {
    throw std::invalid_argument("split fractions must satisfy 0 < min <= max < 1");
  }
  const auto& e = c.edits;
  if (e.blur_min < 0 || e.blur_max < e.blur_min || !(e.crop_min > 0.0) || e.crop_max > 1.0 ||
      e.crop_min > e.crop_max || e.rotation_deg < 0.0 || e.brightness < 0.0) {
    throw std::invalid_argument("edit chain ranges are inconsistent");
  }
}

std::vector<const Video*> Corpus::videos_with_role(Role role) const {
  std::vector<const Video*> out;
  for (const auto& v : videos) {
    if (v.role == role) out.push_back(&v.video);
  }
  return out;
}

std::vector<const Video*> Corpus::queries() const {
  std::vector<const Video*> out;
  for (const auto& v : videos) {
    if (v.role == Role::Positive || v.role == Role::Stacked || v.role == Role::Distractor) {
      out.push_back(&v.video);
    }
  }
  return out;
}

Corpus generate_corpus(const CorpusConfig& config) {
  validate(config);
  const auto& c = config;
  Corpus corpus;
  corpus.config = config;

  struct Plan {
    Role role;
    std::string id;
  };
  std::vector<Plan> plan;
  for (int i = 0; i < c.references; ++i) plan.push_back({Role::Reference, make_id('R', i)});
  int q = 0;
  for (int i = 0; i < c.positives; ++i) plan.push_back({Role::Positive, make_id('Q', q++)});
  for (int i = 0; i < c.stacked; ++i) plan.push_back({Role::Stacked, make_id('Q', q++)});
  for (int i = 0; i < c.distractors; ++i) plan.push_back({Role::Distractor, make_id('Q', q++)});
  for (int i = 0; i < c.background; ++i) plan.push_back({Role::Background, make_id('B', i)});

  // Reference textures are a pure function of (master seed, reference index).
  auto reference_texture = [&](int index) {
    return random_texture(derive_seed(c.seed, static_cast<std::uint64_t>(index)));
  };

  corpus.videos.resize(plan.size());
  parallel_for(plan.size(), [&](std::size_t i) {
    CorpusVideo& out = corpus.videos[i];
    out.role = plan[i].role;
    out.video.id = plan[i].id;
    out.video.fps = c.fps;
    out.seed = derive_seed(c.seed, static_cast<std::uint64_t>(i));
    Rng rng(out.seed);
    std::uniform_int_distribution<int> pick_ref(0, std::max(0, c.references - 1));
    switch (out.role) {
      case Role::Reference: {
        out.video.frames = render_clip(reference_texture(static_cast<int>(i)), c.width, c.height, c.fps,
                                       0.0, c.reference_duration_s);
        break;
      }
      case Role::Positive: {
        const int src = pick_ref(rng);
        const double start = segment_start(rng, c);
        const EditParams edit = random_edit(rng(), c.edits);
        auto frames = render_clip(reference_texture(src), c.width, c.height, c.fps, start, c.query_duration_s);
        for (auto& f : frames) f = apply_edit(f, edit);
        out.video.frames = std::move(frames);
        out.sources = {make_id('R', src)};
        break;
      }
      case Role::Stacked: {
        out.layout = random_layout(rng, c);
        const std::size_t n_tiles = out.layout.kind == scene::LayoutKind::Grid ? 4 : 2;
        std::vector<int> chosen;
        while (chosen.size() < n_tiles) {
          const int r = pick_ref(rng);
          if (std::find(chosen.begin(), chosen.end(), r) == chosen.end()) chosen.push_back(r);
        }
        std::vector<TextureParams> textures;
        std::vector<double> starts;
        std::vector<EditParams> edits;
        for (const int r : chosen) {
          textures.push_back(reference_texture(r));
          starts.push_back(segment_start(rng, c));
          edits.push_back(random_edit(rng(), c.edits));
          out.sources.push_back(make_id('R', r));
        }
        out.video.frames = stack_clips(textures, starts, edits, out.layout, c);
        break;
      }
      case Role::Distractor:
      case Role::Background: {
        const double duration = out.role == Role::Distractor ? c.distractor_duration_s : c.reference_duration_s;
        out.video.frames = render_clip(random_texture(rng()), c.width, c.height, c.fps, 0.0, duration);
        break;
      }
    }
  });
  for (const auto& v : corpus.videos) {
    for (const auto& src : v.sources) corpus.truth.pairs.emplace(v.video.id, src);
  }
  return corpus;
}

StackedSample make_stacked_video(std::uint64_t seed, const CorpusConfig& c) {
  Rng rng(seed);
  StackedSample out;
  out.truth = random_layout(rng, c);
  const std::size_t n = out.truth.kind == scene::LayoutKind::Grid ? 4 : 2;
  std::vector<TextureParams> textures;
  std::vector<double> starts;
  std::vector<EditParams> edits;
  for (std::size_t t = 0; t < n; ++t) {
    textures.push_back(random_texture(rng()));
    starts.push_back(uniform(rng, 0.0, 3.0));
    edits.push_back(random_edit(rng(), c.edits));
  }
  out.video.id = "stacked";
  out.video.fps = c.fps;
  out.video.frames = stack_clips(textures, starts, edits, out.truth, c);
  return out;
}

Video make_single_scene_video(std::uint64_t seed, const CorpusConfig& c, bool high_texture) {
  Rng rng(seed);
  Video v;
  v.id = "single";
  v.fps = c.fps;
  const TextureParams tex = random_texture(rng(), high_texture);
  v.frames = render_clip(tex, c.width, c.height, c.fps, 0.0, c.query_duration_s);
  if (!high_texture) {
    // Half of the plain videos are edited copies, which carry rotation corners.
    const EditParams edit = random_edit(rng(), c.edits);
    if (uniform(rng, 0.0, 1.0) < 0.5) {
      for (auto& f : v.frames) f = apply_edit(f, edit);
    }
  }
  return v;
}

}  // namespace vcd::eval
