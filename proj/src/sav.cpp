#include "doceval/sav.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace doceval::sav {

void AttentionDump::validate() const {
  if (layers <= 0 || heads <= 0 || dim <= 0) {
    throw Error(ErrorCode::DimMismatch, "dump dimensions must be positive");
  }
  for (const auto& ex : examples) {
    const auto& v = ex.vectors;
    if (v.layers() != layers || v.heads() != heads || v.dim() != dim) {
      throw Error(ErrorCode::DimMismatch,
                  "example '" + ex.id + "' has shape " + std::to_string(v.layers()) + "x" +
                      std::to_string(v.heads()) + "x" + std::to_string(v.dim()) + ", expected " +
                      std::to_string(layers) + "x" + std::to_string(heads) + "x" +
                      std::to_string(dim));
    }
    if (ex.label < -1 || ex.label >= static_cast<int>(labels.size())) {
      throw Error(ErrorCode::UnknownLabel,
                  "example '" + ex.id + "' has label index " + std::to_string(ex.label));
    }
  }
}

namespace {

// Checks the few-shot preconditions and returns per-class example counts.
std::vector<int> check_few_shot(const AttentionDump& dump) {
  dump.validate();
  if (dump.examples.empty()) throw Error(ErrorCode::EmptyDump, "dump has no examples");
  if (dump.labels.size() < 2) {
    throw Error(ErrorCode::DegenerateLabels,
                "at least two classes required, got " + std::to_string(dump.labels.size()));
  }
  std::vector<int> counts(dump.labels.size(), 0);
  for (const auto& ex : dump.examples) {
    if (ex.label < 0) throw Error(ErrorCode::UnlabeledExample, "example '" + ex.id + "' has no label");
    ++counts[static_cast<std::size_t>(ex.label)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw Error(ErrorCode::EmptyClass, "class '" + dump.labels[c] + "' has no examples");
  }
  return counts;
}

std::vector<Eigen::MatrixXd> class_sums(const AttentionDump& dump) {
  const auto rows = static_cast<std::size_t>(dump.layers) * static_cast<std::size_t>(dump.heads);
  const auto classes = static_cast<Eigen::Index>(dump.labels.size());
  std::vector<Eigen::MatrixXd> sums(rows, Eigen::MatrixXd::Zero(classes, dump.dim));
  for (const auto& ex : dump.examples) {
    const auto& data = ex.vectors.data();
    for (std::size_t r = 0; r < rows; ++r) {
      sums[r].row(ex.label) += data.row(static_cast<Eigen::Index>(r)).cast<double>();
    }
  }
  return sums;
}

HeadId head_of(std::size_t row, int heads) {
  return {static_cast<int>(row / static_cast<std::size_t>(heads)),
          static_cast<int>(row % static_cast<std::size_t>(heads))};
}

}  // namespace

std::vector<Eigen::MatrixXd> compute_centroids(const AttentionDump& dump) {
  const auto counts = check_few_shot(dump);
  auto centroids = class_sums(dump);
  for (auto& m : centroids) {
    for (Eigen::Index c = 0; c < m.rows(); ++c) m.row(c) /= counts[static_cast<std::size_t>(c)];
  }
  return centroids;
}

HeadScoreTable score_heads(const AttentionDump& dump, bool leave_one_out) {
  const auto counts = check_few_shot(dump);
  const auto sums = class_sums(dump);
  HeadScoreTable table;
  table.reserve(sums.size());
  for (std::size_t r = 0; r < sums.size(); ++r) {
    Eigen::MatrixXd centroids = sums[r];
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) centroids.row(c) /= counts[static_cast<std::size_t>(c)];

    int correct = 0;
    for (const auto& ex : dump.examples) {
      const auto x = ex.vectors.data().row(static_cast<Eigen::Index>(r));
      int predicted = 0;
      if (!leave_one_out) {
        double s;
        predicted = nearest_centroid(x, centroids, s);
      } else {
        const auto own = static_cast<std::size_t>(ex.label);
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
          double s;
          if (static_cast<std::size_t>(c) != own) {
            s = cosine_similarity(x, centroids.row(c));
          } else if (counts[own] == 1) {
            s = -std::numeric_limits<double>::infinity();  // class has no other member
          } else {
            const Eigen::RowVectorXd held_out =
                (sums[r].row(c) - x.cast<double>()) / static_cast<double>(counts[own] - 1);
            s = cosine_similarity(x, held_out);
          }
          if (s > best || c == 0) {
            best = s;
            predicted = static_cast<int>(c);
          }
        }
      }
      if (predicted == ex.label) ++correct;
    }
    table.push_back({head_of(r, dump.heads), correct});
  }
  return table;
}

SavModel fit(const AttentionDump& dump, int k, bool leave_one_out, std::vector<std::string>* warnings) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  auto scores = score_heads(dump, leave_one_out);
  const auto centroids = compute_centroids(dump);

  std::stable_sort(scores.begin(), scores.end(), [](const HeadScore& a, const HeadScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.head < b.head;
  });
  const std::size_t keep = std::min(static_cast<std::size_t>(k), scores.size());

  SavModel model;
  model.labels = dump.labels;
  model.k = k;
  model.dim = dump.dim;
  for (std::size_t i = 0; i < keep; ++i) {
    const auto& hs = scores[i];
    const auto row = static_cast<std::size_t>(hs.head.layer) * static_cast<std::size_t>(dump.heads) +
                     static_cast<std::size_t>(hs.head.head);
    model.heads.push_back({hs.head, hs.score, centroids[row]});
    if (warnings) {
      const auto& m = centroids[row];
      for (Eigen::Index c = 0; c < m.rows(); ++c) {
        if (m.row(c).norm() < kZeroNorm) {
          warnings->push_back("zero-norm centroid for class '" + dump.labels[static_cast<std::size_t>(c)] +
                              "' at head (" + std::to_string(hs.head.layer) + ", " +
                              std::to_string(hs.head.head) + ")");
        }
      }
    }
  }
  return model;
}

Prediction classify(const SavModel& model, const AttentionTensorf& query, std::string id) {
  if (query.dim() != model.dim) {
    throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query.dim()) +
                                            " does not match model dim " + std::to_string(model.dim));
  }
  const std::size_t classes = model.labels.size();
  Prediction p;
  p.id = std::move(id);
  p.votes.assign(classes, 0);
  std::vector<double> support(classes, 0.0);
  for (const auto& head : model.heads) {
    const auto [layer, h] = head.head_id;
    if (layer >= query.layers() || h >= query.heads()) {
      throw Error(ErrorCode::DimMismatch, "query has no head (" + std::to_string(layer) + ", " +
                                              std::to_string(h) + ")");
    }
    double similarity = 0.0;
    const int chosen = nearest_centroid(query.head(layer, h), head.centroids, similarity);
    ++p.votes[static_cast<std::size_t>(chosen)];
    support[static_cast<std::size_t>(chosen)] += similarity;
    p.per_head.push_back({head.head_id, chosen, similarity});
  }
  for (std::size_t c = 1; c < classes; ++c) {
    const auto best = static_cast<std::size_t>(p.label);
    if (p.votes[c] > p.votes[best] || (p.votes[c] == p.votes[best] && support[c] > support[best])) {
      p.label = static_cast<int>(c);
    }
  }
  return p;
}

Evaluation evaluate(const SavModel& model, const AttentionDump& dump) {
  dump.validate();
  if (dump.examples.empty()) throw Error(ErrorCode::EmptyDump, "dump has no examples");
  std::vector<int> to_model(dump.labels.size(), -1);
  for (std::size_t i = 0; i < dump.labels.size(); ++i) {
    const auto it = std::find(model.labels.begin(), model.labels.end(), dump.labels[i]);
    if (it != model.labels.end()) to_model[i] = static_cast<int>(it - model.labels.begin());
  }

  Evaluation ev;
  for (const auto& label : model.labels) ev.per_class.push_back({label, 0, 0});
  int correct = 0;
  for (const auto& ex : dump.examples) {
    if (ex.label < 0) throw Error(ErrorCode::UnlabeledExample, "example '" + ex.id + "' has no label");
    const int truth = to_model[static_cast<std::size_t>(ex.label)];
    if (truth < 0) {
      throw Error(ErrorCode::UnknownLabel, "label '" + dump.labels[static_cast<std::size_t>(ex.label)] +
                                               "' of example '" + ex.id + "' is not in the model");
    }
    const auto p = classify(model, ex.vectors, ex.id);
    auto& cls = ev.per_class[static_cast<std::size_t>(truth)];
    ++cls.total;
    if (p.label == truth) {
      ++cls.correct;
      ++correct;
    }
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(dump.examples.size());
  return ev;
}

}  // namespace doceval::sav
