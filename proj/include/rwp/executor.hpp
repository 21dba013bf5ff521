/* Copyright 2026 The RWP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef RWP_EXECUTOR_HPP_
#define RWP_EXECUTOR_HPP_

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "rwp/model.hpp"

namespace rwp {

enum class ExecMode { kSequential, kParallel };

struct ExecPlan {
  ExecMode mode = ExecMode::kSequential;
  std::size_t worker_count = 1;

  static ExecPlan sequential() { return {ExecMode::kSequential, 1}; }
  static ExecPlan parallel(std::size_t workers = 2) { return {ExecMode::kParallel, workers}; }
  bool operator==(const ExecPlan&) const = default;
};

// Fixed-size pool of worker threads fed from a FIFO queue.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t num_threads);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::future<void> submit(std::function<void()> task);
  std::size_t size() const { return threads_.size(); }

 private:
  void work_loop();

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::packaged_task<void()>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

struct TwoGrads {
  LossAndGrad original;   // at params_a on batch_a
  LossAndGrad perturbed;  // at params_b on batch_b
};

// Runs the two independent gradient evaluations of a step. Under a parallel
// plan they are handed to distinct pool workers and joined before returning.
// Each evaluation has its own buffers and a fixed reduction order, so the
// result does not depend on the plan. Holds no randomness.
class Executor {
 public:
  explicit Executor(ExecPlan plan = ExecPlan::sequential());

  const ExecPlan& plan() const { return plan_; }

  // Throws EvaluationError naming the side that failed (original first when
  // both fail).
  TwoGrads eval_two_grads(const Model& model, const ParamVector& params_a, const Batch& batch_a,
                          const ParamVector& params_b, const Batch& batch_b);

 private:
  ExecPlan plan_;
  std::unique_ptr<ThreadPool> pool_;
};

}  // namespace rwp

#endif  // RWP_EXECUTOR_HPP_
