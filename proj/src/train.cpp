#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "loadfc/csv.hpp"
#include "loadfc/errors.hpp"
#include "loadfc/net.hpp"

namespace loadfc {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Per-sample dropout stream: independent of batch layout and worker count.
std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t epoch, std::size_t slot) {
  return std::mt19937_64(mix(mix(seed ^ 0xD1B54A32D192ED03ULL) + epoch) ^ mix(slot));
}

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

struct Stats {
  double mean;
  double std;
};

Stats moments(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(xs.size()));
  if (!(sd > 0.0) || !std::isfinite(sd)) sd = 1.0;
  return {mean, sd};
}

double evaluate(const ResidualNet& net, const std::vector<Window>& windows, std::size_t first, std::size_t last) {
  ForwardCache cache;
  double sse = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const double e = forward(net, windows[i].input, false, nullptr, &cache) - windows[i].target;
    sse += e * e;
  }
  return sse / static_cast<double>(last - first);
}

}  // namespace

std::vector<Window> make_windows(const ResidualSeries& residuals, std::size_t window) {
  if (window < 1) throw ConfigError("window must be >= 1");
  if (residuals.size() < window + 1) {
    throw InsufficientDataError("residual series has " + std::to_string(residuals.size()) +
                                " values; at least " + std::to_string(window + 1) + " are needed");
  }
  const auto pts = residuals.points();
  std::vector<Window> out;
  // `run` counts consecutive day indices ending at position i.
  std::size_t run = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    run = (i > 0 && pts[i].index == pts[i - 1].index + 1) ? run + 1 : 1;
    if (run < window + 1) continue;
    Window w;
    w.input.reserve(window);
    for (std::size_t j = i - window; j < i; ++j) w.input.push_back(pts[j].value);
    w.target = pts[i].value;
    w.target_index = pts[i].index;
    out.push_back(std::move(w));
  }
  return out;
}

TrainedNet train(const ResidualSeries& residuals, const NetConfig& config) {
  config.validate();
  const auto windows = make_windows(residuals, config.window);
  if (windows.empty()) throw InsufficientDataError("no gap-free window of the configured length exists");

  const std::size_t n = windows.size();
  std::size_t n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = n - 1;
  const std::size_t n_train = n - n_val;

  // Normalisation from values that precede the validation targets.
  const long cutoff = n_val > 0 ? windows[n_train].target_index : std::numeric_limits<long>::max();
  std::vector<double> seen;
  for (const auto& p : residuals.points()) {
    if (p.index < cutoff) seen.push_back(p.value);
  }
  const Stats st = moments(seen);

  ResidualNet net(config, st.mean, st.std, config.seed);
  ResidualNet best = net;
  AdamState adam = AdamState::for_params(net.params().size(), config);
  TrainingLog log;
  log.best_loss = std::numeric_limits<double>::infinity();

  const double var = net.norm_std() * net.norm_std();
  const std::size_t workers = std::max<std::size_t>(1, config.workers);
  std::vector<std::vector<double>> worker_grads(workers, std::vector<double>(net.params().size()));
  std::vector<ForwardCache> caches(workers);
  std::vector<double> worker_sse(workers);
  std::vector<double> grads(net.params().size());

  std::mt19937_64 order_rng(mix(config.seed ^ 0x5851F42D4C957F2DULL));
  std::vector<std::size_t> order(n_train);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, order_rng);
    double sse = 0.0;

    for (std::size_t start = 0; start < n_train; start += config.batch_size) {
      const std::size_t stop = std::min(n_train, start + config.batch_size);
      const double scale = 2.0 / (static_cast<double>(stop - start) * var);

      auto run = [&](std::size_t w, std::size_t lo, std::size_t hi) {
        auto& g = worker_grads[w];
        std::fill(g.begin(), g.end(), 0.0);
        double local = 0.0;
        for (std::size_t s = lo; s < hi; ++s) {
          const auto& win = windows[order[s]];
          auto rng = sample_rng(config.seed, epoch, s);
          const double out = forward(net, win.input, true, &rng, &caches[w]);
          const double err = out - win.target;
          local += err * err;
          backward_accumulate(net, caches[w], scale * err, g);
        }
        worker_sse[w] = local;
      };

      const std::size_t count = stop - start;
      const std::size_t used = std::min(workers, count);
      if (used <= 1) {
        run(0, start, stop);
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < used; ++w) {
          const std::size_t lo = start + count * w / used;
          const std::size_t hi = start + count * (w + 1) / used;
          pool.emplace_back(run, w, lo, hi);
        }
      }
      // Fixed reduction order keeps results reproducible for a given worker count.
      std::copy(worker_grads[0].begin(), worker_grads[0].end(), grads.begin());
      sse += worker_sse[0];
      for (std::size_t w = 1; w < used; ++w) {
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += worker_grads[w][i];
        sse += worker_sse[w];
      }
      if (!std::isfinite(sse)) throw DivergenceError("training loss became non-finite in epoch " + std::to_string(epoch));
      adam_step(net.mutable_params(), grads, adam);
    }

    EpochLog e{epoch, sse / static_cast<double>(n_train), std::numeric_limits<double>::quiet_NaN()};
    double score = e.train_mse;
    if (n_val > 0) {
      e.val_mse = evaluate(net, windows, n_train, n);
      score = e.val_mse;
    }
    if (!std::isfinite(score)) throw DivergenceError("validation loss became non-finite in epoch " + std::to_string(epoch));
    log.epochs.push_back(e);
    if (score < log.best_loss) {
      log.best_loss = score;
      log.best_epoch = epoch;
      best = net;
    }
  }
  if (config.epochs == 0) log.best_loss = n_val > 0 ? evaluate(net, windows, n_train, n) : evaluate(net, windows, 0, n);
  return {std::move(best), std::move(log)};
}

std::vector<double> predict_residuals(const ResidualNet& net, const ResidualSeries& history, std::size_t horizon) {
  const std::size_t L = net.config().window;
  if (history.size() < L) {
    throw InsufficientDataError("history has " + std::to_string(history.size()) + " values; the network needs " +
                                std::to_string(L));
  }
  const auto pts = history.points();
  for (std::size_t i = pts.size() - L + 1; i < pts.size(); ++i) {
    if (pts[i].index != pts[i - 1].index + 1) {
      throw InsufficientDataError("the last " + std::to_string(L) + " history values are not consecutive days");
    }
  }
  std::vector<double> buf;
  buf.reserve(L + horizon);
  for (std::size_t i = pts.size() - L; i < pts.size(); ++i) buf.push_back(pts[i].value);

  ForwardCache cache;
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    const double next = forward(net, std::span<const double>(buf).subspan(h, L), false, nullptr, &cache);
    out.push_back(next);
    buf.push_back(next);
  }
  return out;
}

std::string training_log_csv(const TrainingLog& log) {
  CsvTable t;
  t.header = {"epoch", "train_mse", "val_mse"};
  for (const auto& e : log.epochs) {
    t.rows.push_back({std::to_string(e.epoch), format_number(e.train_mse),
                      std::isfinite(e.val_mse) ? format_number(e.val_mse) : std::string("nan")});
  }
  return to_csv(t);
}

}  // namespace loadfc
