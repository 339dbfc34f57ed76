#pragma once

#include "hoferkit/expr.hpp"
#include "hoferkit/types.hpp"

#include <optional>
#include <string>

namespace hoferkit {

/// Finite sample of a closed subset of R^{2n}.  Points are the columns of
/// a dense matrix; provenance records the sampler that produced them.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(Mat points, std::string label = {}, std::optional<json> provenance = std::nullopt);

  int dim() const { return static_cast<int>(points_.rows()); }
  int size() const { return static_cast<int>(points_.cols()); }
  const Mat& points() const { return points_; }
  Vec point(int i) const { return points_.col(i); }
  const std::string& label() const { return label_; }
  const std::optional<json>& provenance() const { return provenance_; }

  PointCloud relabeled(std::string label) const;
  bool contains(const Vec& p, double tol = 1e-12) const;

 private:
  Mat points_;
  std::string label_;
  std::optional<json> provenance_;
};

// Samplers.  Each records its parameters as provenance.
PointCloud segment_cloud(const Vec& from, const Vec& to, int count, std::string label = {});
/// Circle of radius r in the (axis_a, axis_b) coordinate plane around center.
PointCloud circle_cloud(const Vec& center, double radius, int count, int axis_a = 0,
                        int axis_b = -1, std::string label = {});
/// Filled disk sampled on rings (ring 0 is the center point).
PointCloud disk_cloud(const Vec& center, double radius, int rings, int per_ring,
                      std::string label = {});
PointCloud random_box_cloud(const Vec& lo, const Vec& hi, int count, unsigned seed,
                            std::string label = {});

double min_pairwise_distance(const PointCloud& a, const PointCloud& b);
double hausdorff_distance(const PointCloud& a, const PointCloud& b);

/// One point per row; a JSON sidecar (<path>.json) holds label/provenance.
void write_cloud_csv(const std::string& path, const PointCloud& cloud);

json cloud_to_json_spec(const PointCloud& cloud);

}  // namespace hoferkit
