#include "splitdom/samples.hpp"

#include <sstream>
#include <stdexcept>

namespace splitdom {

PointSamples::PointSamples(std::shared_ptr<const CocycleSystem> system, std::vector<Vector> points, std::string label)
    : system_(std::move(system)), points_(std::move(points)), label_(std::move(label)) {
  if (!system_) throw std::invalid_argument("point samples need a cocycle system");
  if (points_.empty()) throw std::invalid_argument("sample set must be nonempty");
  for (const auto& p : points_) {
    if (p.size() != system_->state_dim()) throw std::invalid_argument("sample point has wrong dimension");
  }
}

CocycleSegment PointSamples::segment(std::size_t i, double span) const {
  const auto key = std::make_pair(i, span);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
  }
  auto seg = std::make_shared<const CocycleSegment>(system_->segment(points_.at(i), span));
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(key, seg);
  return *seg;
}

std::optional<Vector> PointSamples::flow_direction(std::size_t i) const {
  return system_->flow_direction(points_.at(i));
}

std::string PointSamples::describe() const {
  std::ostringstream os;
  os << (label_.empty() ? "points" : label_) << ": " << points_.size() << " point(s) of " << system_->name();
  return os.str();
}

OrbitSamples::OrbitSamples(std::shared_ptr<const CocycleSegment> trajectory, std::vector<std::size_t> indices,
                           std::shared_ptr<const CocycleSystem> system, std::string label)
    : trajectory_(std::move(trajectory)),
      indices_(std::move(indices)),
      system_(std::move(system)),
      label_(std::move(label)) {
  if (!trajectory_) throw std::invalid_argument("orbit samples need a trajectory");
  if (indices_.empty()) throw std::invalid_argument("sample set must be nonempty");
  for (std::size_t idx : indices_) {
    if (idx >= trajectory_->points().size()) throw std::out_of_range("orbit sample index beyond the trajectory");
  }
}

CocycleSegment OrbitSamples::segment(std::size_t i, double span) const {
  const std::size_t begin = indices_.at(i);
  const CocycleSegment tail = trajectory_->slice(begin, trajectory_->size());
  const std::size_t end = tail.index_after(span);
  return tail.slice(0, end);
}

std::optional<Vector> OrbitSamples::flow_direction(std::size_t i) const {
  if (!system_) return std::nullopt;
  return system_->flow_direction(point(i));
}

std::string OrbitSamples::describe() const {
  std::ostringstream os;
  os << (label_.empty() ? "orbit" : label_) << ": " << indices_.size() << " checkpoint(s) of a trajectory over t in ["
     << trajectory_->start_time() << ", " << trajectory_->times().back() << "]";
  return os.str();
}

}  // namespace splitdom
