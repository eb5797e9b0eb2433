#include <cstdio>
#include <memory>
#include <vector>

struct Shape {
  virtual ~Shape() = default;
  virtual long area() const = 0;
  virtual const char* name() const { return "shape"; }
};

struct Rect : Shape {
  long w, h;
  Rect(long w_, long h_) : w(w_), h(h_) {}
  long area() const override { return w * h; }
  const char* name() const override { return "rect"; }
};

struct Square : Rect {
  explicit Square(long s) : Rect(s, s) {}
  const char* name() const override { return "square"; }
};

struct Tri : Shape {
  long b, h;
  Tri(long b_, long h_) : b(b_), h(h_) {}
  long area() const override { return b * h / 2; }
};

class Counter {
 public:
  Counter() { ++live_; }
  Counter(const Counter&) { ++live_; }
  ~Counter() { --live_; }
  static int live() { return live_; }

 private:
  static int live_;
};
int Counter::live_ = 0;

static void case_dispatch() {
  std::vector<std::unique_ptr<Shape>> shapes;
  shapes.push_back(std::make_unique<Rect>(3, 4));
  shapes.push_back(std::make_unique<Square>(5));
  shapes.push_back(std::make_unique<Tri>(6, 7));
  long total = 0;
  std::printf("[OO-L3-01]");
  for (const auto& s : shapes) {
    total += s->area();
    std::printf(" %s:%ld", s->name(), s->area());
  }
  std::printf(" total=%ld\n", total);
}

static void case_lifetime() {
  int peak = 0;
  {
    std::vector<Counter> v(4);
    Counter extra = v[0];
    peak = Counter::live();
  }
  std::printf("[OO-L2-01] peak=%d after=%d\n", peak, Counter::live());
}

int main() {
  case_dispatch();
  case_lifetime();
  return 0;
}
