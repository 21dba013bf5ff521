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
#include "rwp/executor.hpp"

#include <exception>
#include <memory>

#include "rwp/error.hpp"

namespace rwp {

ThreadPool::ThreadPool(std::size_t num_threads) {
  threads_.reserve(num_threads);
  for (std::size_t i = 0; i < num_threads; ++i) {
    threads_.emplace_back(&ThreadPool::work_loop, this);
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

std::future<void> ThreadPool::submit(std::function<void()> task) {
  std::packaged_task<void()> packaged(std::move(task));
  std::future<void> result = packaged.get_future();
  {
    std::lock_guard<std::mutex> lock(mu_);
    queue_.push_back(std::move(packaged));
  }
  cv_.notify_one();
  return result;
}

void ThreadPool::work_loop() {
  while (true) {
    std::packaged_task<void()> task;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;  // stopping and drained
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

Executor::Executor(ExecPlan plan) : plan_(plan) {
  if (plan_.worker_count == 0) throw ConfigError("worker_count must be positive");
  if (plan_.mode == ExecMode::kParallel) {
    if (plan_.worker_count < 2) throw ConfigError("parallel plan needs at least 2 workers");
    pool_ = std::make_unique<ThreadPool>(plan_.worker_count);
  }
}

TwoGrads Executor::eval_two_grads(const Model& model, const ParamVector& params_a,
                                  const Batch& batch_a, const ParamVector& params_b,
                                  const Batch& batch_b) {
  TwoGrads out;
  std::exception_ptr err_a;
  std::exception_ptr err_b;
  auto run_a = [&] {
    try {
      out.original = loss_and_grad(model, params_a, batch_a);
    } catch (...) {
      err_a = std::current_exception();
    }
  };
  auto run_b = [&] {
    try {
      out.perturbed = loss_and_grad(model, params_b, batch_b);
    } catch (...) {
      err_b = std::current_exception();
    }
  };

  if (plan_.mode == ExecMode::kParallel) {
    std::future<void> fa = pool_->submit(run_a);
    std::future<void> fb = pool_->submit(run_b);
    fa.get();
    fb.get();
  } else {
    run_a();
    run_b();
  }

  auto rethrow = [](EvalSide side, const std::exception_ptr& e) {
    try {
      std::rethrow_exception(e);
    } catch (const std::exception& ex) {
      throw EvaluationError(side, ex.what());
    }
  };
  if (err_a) rethrow(EvalSide::kOriginal, err_a);
  if (err_b) rethrow(EvalSide::kPerturbed, err_b);
  return out;
}

}  // namespace rwp
