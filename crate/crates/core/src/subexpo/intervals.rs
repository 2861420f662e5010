use crate::graph::BipartiteInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Open,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub vertex: usize,
    pub kind: EventKind,
}

/// Every free vertex with at least one neighbor spans the positions between
/// its open and close events. A vertex whose interval closes before another
/// one opens can always be placed first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSystem {
    open_at: Vec<Option<usize>>,
    close_at: Vec<Option<usize>>,
    events: Vec<Event>,
    isolated: Vec<usize>,
}

impl IntervalSystem {
    pub fn n(&self) -> usize {
        self.open_at.len()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Free vertices without neighbors; they take no part in the sweep.
    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    /// `(x_a, y_a)` for a non-isolated vertex.
    pub fn interval(&self, a: usize) -> Option<(usize, usize)> {
        Some((self.open_at[a]?, self.close_at[a]?))
    }
}

/// Buckets each vertex's open event at its leftmost neighbor and its close
/// event at its rightmost one. Within a fixed vertex the bucket emits closes
/// of degree > 1 vertices, then degree-1 vertices (open and close together),
/// then opens of degree > 1 vertices.
pub fn build_interval_system(inst: &BipartiteInstance) -> IntervalSystem {
    let n = inst.n_free();
    let mut buckets: Vec<Vec<Event>> = vec![Vec::new(); inst.n_fixed()];
    let mut isolated = Vec::new();
    for a in 0..n {
        let nbrs = inst.neighbors(a);
        let (Some(&left), Some(&right)) = (nbrs.first(), nbrs.last()) else {
            isolated.push(a);
            continue;
        };
        buckets[left].push(Event {
            vertex: a,
            kind: EventKind::Open,
        });
        buckets[right].push(Event {
            vertex: a,
            kind: EventKind::Close,
        });
    }

    let mut events: Vec<Event> = Vec::with_capacity(2 * (n - isolated.len()));
    for bucket in &buckets {
        let wide = |e: &&Event| inst.degree(e.vertex) > 1;
        events.extend(bucket.iter().filter(wide).filter(|e| e.kind == EventKind::Close));
        events.extend(bucket.iter().filter(|e| inst.degree(e.vertex) == 1));
        events.extend(bucket.iter().filter(wide).filter(|e| e.kind == EventKind::Open));
    }

    let mut open_at = vec![None; n];
    let mut close_at = vec![None; n];
    for (pos, e) in events.iter().enumerate() {
        match e.kind {
            EventKind::Open => open_at[e.vertex] = Some(pos),
            EventKind::Close => close_at[e.vertex] = Some(pos),
        }
    }
    IntervalSystem {
        open_at,
        close_at,
        events,
        isolated,
    }
}

/// Active-set sizes over the sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidthReport {
    pub max_width: usize,
    /// `|M_t|` after each event.
    pub widths: Vec<usize>,
    /// `histogram[w]` counts the events after which `|M_t| = w`.
    pub histogram: Vec<usize>,
    pub isolated: usize,
}

pub fn characterize_system(system: &IntervalSystem) -> WidthReport {
    let mut width = 0usize;
    let widths: Vec<usize> = system
        .events()
        .iter()
        .map(|e| {
            match e.kind {
                EventKind::Open => width += 1,
                EventKind::Close => width -= 1,
            }
            width
        })
        .collect();
    let max_width = widths.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0; max_width + 1];
    for &w in &widths {
        histogram[w] += 1;
    }
    WidthReport {
        max_width,
        widths,
        histogram,
        isolated: system.isolated().len(),
    }
}

pub fn characterize_instance(inst: &BipartiteInstance) -> WidthReport {
    characterize_system(&build_interval_system(inst))
}
