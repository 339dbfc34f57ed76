#include "hoferkit/pointcloud.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace hoferkit {

PointCloud::PointCloud(Mat points, std::string label, std::optional<json> provenance)
    : points_(std::move(points)), label_(std::move(label)), provenance_(std::move(provenance)) {
  if (points_.cols() == 0) throw std::invalid_argument("point cloud must be nonempty");
  if (points_.rows() < 2 || points_.rows() % 2 != 0)
    throw std::invalid_argument("point dimension must be even and >= 2");
}

PointCloud PointCloud::relabeled(std::string label) const {
  return PointCloud(points_, std::move(label), provenance_);
}

bool PointCloud::contains(const Vec& p, double tol) const {
  for (int i = 0; i < size(); ++i)
    if ((points_.col(i) - p).lpNorm<Eigen::Infinity>() <= tol) return true;
  return false;
}

PointCloud segment_cloud(const Vec& from, const Vec& to, int count, std::string label) {
  if (count < 2) throw std::invalid_argument("segment cloud needs at least 2 points");
  Mat pts(from.size(), count);
  for (int i = 0; i < count; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(count - 1);
    pts.col(i) = (1.0 - s) * from + s * to;
  }
  json prov;
  prov["kind"] = "segment";
  prov["from"] = std::vector<double>(from.data(), from.data() + from.size());
  prov["to"] = std::vector<double>(to.data(), to.data() + to.size());
  prov["count"] = count;
  return PointCloud(std::move(pts), std::move(label), prov);
}

PointCloud circle_cloud(const Vec& center, double radius, int count, int axis_a, int axis_b,
                        std::string label) {
  if (count < 3) throw std::invalid_argument("circle cloud needs at least 3 points");
  const int dim = static_cast<int>(center.size());
  if (axis_b < 0) axis_b = dim / 2;  // default: the (x_1, y_1) plane
  Mat pts(dim, count);
  for (int i = 0; i < count; ++i) {
    const double phi = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(count);
    Vec p = center;
    p[axis_a] += radius * std::cos(phi);
    p[axis_b] += radius * std::sin(phi);
    pts.col(i) = p;
  }
  json prov;
  prov["kind"] = "circle";
  prov["center"] = std::vector<double>(center.data(), center.data() + center.size());
  prov["radius"] = radius;
  prov["count"] = count;
  prov["axes"] = {axis_a, axis_b};
  return PointCloud(std::move(pts), std::move(label), prov);
}

PointCloud disk_cloud(const Vec& center, double radius, int rings, int per_ring,
                      std::string label) {
  if (rings < 1 || per_ring < 3) throw std::invalid_argument("disk cloud needs rings>=1, per_ring>=3");
  const int dim = static_cast<int>(center.size());
  const int count = 1 + rings * per_ring;
  Mat pts(dim, count);
  pts.col(0) = center;
  int col = 1;
  for (int r = 1; r <= rings; ++r) {
    const double rho = radius * static_cast<double>(r) / static_cast<double>(rings);
    for (int i = 0; i < per_ring; ++i) {
      const double phi = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(per_ring);
      Vec p = center;
      p[0] += rho * std::cos(phi);
      p[dim / 2] += rho * std::sin(phi);
      pts.col(col++) = p;
    }
  }
  json prov;
  prov["kind"] = "disk";
  prov["center"] = std::vector<double>(center.data(), center.data() + center.size());
  prov["radius"] = radius;
  prov["rings"] = rings;
  prov["per_ring"] = per_ring;
  return PointCloud(std::move(pts), std::move(label), prov);
}

PointCloud random_box_cloud(const Vec& lo, const Vec& hi, int count, unsigned seed,
                            std::string label) {
  if (count < 1) throw std::invalid_argument("random cloud needs at least 1 point");
  if (lo.size() != hi.size()) throw std::invalid_argument("box corners must share a dimension");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mat pts(lo.size(), count);
  for (int i = 0; i < count; ++i)
    for (int d = 0; d < lo.size(); ++d) pts(d, i) = lo[d] + (hi[d] - lo[d]) * unit(rng);
  json prov;
  prov["kind"] = "box_random";
  prov["min"] = std::vector<double>(lo.data(), lo.data() + lo.size());
  prov["max"] = std::vector<double>(hi.data(), hi.data() + hi.size());
  prov["count"] = count;
  prov["seed"] = seed;
  return PointCloud(std::move(pts), std::move(label), prov);
}

double min_pairwise_distance(const PointCloud& a, const PointCloud& b) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j)
      best = std::min(best, (a.points().col(i) - b.points().col(j)).norm());
  return best;
}

double hausdorff_distance(const PointCloud& a, const PointCloud& b) {
  auto directed = [](const PointCloud& p, const PointCloud& q) {
    double worst = 0.0;
    for (int i = 0; i < p.size(); ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (int j = 0; j < q.size(); ++j)
        nearest = std::min(nearest, (p.points().col(i) - q.points().col(j)).norm());
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

void write_cloud_csv(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  char buf[64];
  for (int d = 0; d < cloud.dim(); ++d) out << (d ? ",m" : "m") << d + 1;
  out << "\n";
  for (int i = 0; i < cloud.size(); ++i) {
    for (int d = 0; d < cloud.dim(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", cloud.points()(d, i));
      out << (d ? "," : "") << buf;
    }
    out << "\n";
  }
  json sidecar;
  sidecar["label"] = cloud.label();
  sidecar["dim"] = cloud.dim();
  sidecar["count"] = cloud.size();
  if (cloud.provenance()) sidecar["provenance"] = *cloud.provenance();
  std::ofstream side(path + ".json");
  side << sidecar.dump(2) << "\n";
}

json cloud_to_json_spec(const PointCloud& cloud) {
  if (cloud.provenance()) return *cloud.provenance();
  json j;
  j["kind"] = "points";
  json pts = json::array();
  for (int i = 0; i < cloud.size(); ++i) {
    const Vec p = cloud.point(i);
    pts.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  }
  j["points"] = std::move(pts);
  return j;
}

}  // namespace hoferkit
