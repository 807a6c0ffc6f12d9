#pragma once

// Finite sets of base points over which criteria quantify, each able to
// produce the cocycle over a time span starting at any of its points.

#include "splitdom/cocycle.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace splitdom {

class SampleSet {
 public:
  virtual ~SampleSet() = default;
  virtual std::size_t size() const = 0;
  virtual Vector point(std::size_t i) const = 0;
  /// Cocycle over [0, span] from sample i.
  virtual CocycleSegment segment(std::size_t i, double span) const = 0;
  /// Flow direction at sample i (flows only).
  virtual std::optional<Vector> flow_direction(std::size_t i) const = 0;
  virtual std::string describe() const = 0;
};

/// Explicit points of a cocycle system; segments are computed on demand and
/// cached per (sample, span).
class PointSamples final : public SampleSet {
 public:
  PointSamples(std::shared_ptr<const CocycleSystem> system, std::vector<Vector> points, std::string label = "");

  std::size_t size() const override { return points_.size(); }
  Vector point(std::size_t i) const override { return points_.at(i); }
  CocycleSegment segment(std::size_t i, double span) const override;
  std::optional<Vector> flow_direction(std::size_t i) const override;
  std::string describe() const override;
  const CocycleSystem& system() const { return *system_; }

 private:
  std::shared_ptr<const CocycleSystem> system_;
  std::vector<Vector> points_;
  std::string label_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<std::size_t, double>, std::shared_ptr<const CocycleSegment>> cache_;
};

/// Checkpoints of one long trajectory; segments are slices of it, so every
/// intermediate base point is a checkpoint of the master trajectory.
class OrbitSamples final : public SampleSet {
 public:
  OrbitSamples(std::shared_ptr<const CocycleSegment> trajectory, std::vector<std::size_t> indices,
               std::shared_ptr<const CocycleSystem> system = nullptr, std::string label = "");

  std::size_t size() const override { return indices_.size(); }
  Vector point(std::size_t i) const override { return trajectory_->points().at(indices_.at(i)); }
  CocycleSegment segment(std::size_t i, double span) const override;
  std::optional<Vector> flow_direction(std::size_t i) const override;
  std::string describe() const override;
  const CocycleSegment& trajectory() const { return *trajectory_; }
  const std::vector<std::size_t>& indices() const { return indices_; }

 private:
  std::shared_ptr<const CocycleSegment> trajectory_;
  std::vector<std::size_t> indices_;
  std::shared_ptr<const CocycleSystem> system_;
  std::string label_;
};

}  // namespace splitdom
