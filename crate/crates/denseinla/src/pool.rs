//! Worker pools implementing the core [`Executor`] contract: static
//! round-robin assignment, no work stealing, and a master that puts results
//! back in task-id order before anything is reduced. Determinism across
//! worker counts follows from that ordering plus pure task bodies.

use std::ffi::OsString;
use std::io;
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use denseinla_core::schedule::{assign, Executor, ScheduleError, Stage, TaskBatch, TaskEvaluator};

use crate::wire::{read_frame, write_frame, Frame};

type Slot = Option<Result<Vec<f64>, String>>;

/// Orders worker replies by task id and reports the lowest failing task.
fn gather(slots: Vec<Slot>) -> Result<Vec<Vec<f64>>, ScheduleError> {
    slots
        .into_iter()
        .enumerate()
        .map(|(task_id, s)| match s {
            Some(Ok(v)) => Ok(v),
            Some(Err(message)) => Err(ScheduleError::WorkerFailure { task_id, message }),
            None => Err(ScheduleError::WorkerFailure { task_id, message: "no result returned".into() }),
        })
        .collect()
}

/// Isolated executors inside this process; each worker is a scoped thread
/// that receives its task list up front and reports over a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThreadPool {
    workers: usize,
    threads_per_worker: usize,
}

impl ThreadPool {
    pub fn new(workers: usize) -> Result<Self, ScheduleError> {
        Self::with_threads(workers, 1)
    }

    /// `threads_per_worker` is recorded for the run log; the dense kernels
    /// themselves run single-threaded.
    pub fn with_threads(workers: usize, threads_per_worker: usize) -> Result<Self, ScheduleError> {
        if workers == 0 {
            return Err(ScheduleError::NoWorkers);
        }
        Ok(Self { workers, threads_per_worker: threads_per_worker.max(1) })
    }

    pub fn threads_per_worker(&self) -> usize {
        self.threads_per_worker
    }
}

impl Executor for ThreadPool {
    fn workers(&self) -> usize {
        self.workers
    }

    fn run(&self, batch: &TaskBatch, eval: &dyn TaskEvaluator) -> Result<Vec<Vec<f64>>, ScheduleError> {
        let n = batch.len();
        let plan = assign(n, self.workers);
        let (tx, rx) = mpsc::channel();
        thread::scope(|scope| {
            for ids in plan.iter().filter(|ids| !ids.is_empty()) {
                let tx = tx.clone();
                scope.spawn(move || {
                    for &id in ids {
                        let r = eval.evaluate(batch.stage, &batch.tasks[id]);
                        let failed = r.is_err();
                        if tx.send((id, r)).is_err() || failed {
                            break;
                        }
                    }
                });
            }
        });
        drop(tx);
        let mut slots: Vec<Slot> = vec![None; n];
        for (id, r) in rx {
            slots[id] = Some(r);
        }
        gather(slots)
    }
}

struct Connection {
    child: Child,
    stream: UnixStream,
}

/// Forked worker processes talking length-prefixed frames over a Unix
/// socket. Workers evaluate with their own copy of the problem, so the
/// evaluator passed to [`Executor::run`] is not used.
pub struct ProcessPool {
    conns: Vec<Mutex<Connection>>,
    socket: PathBuf,
}

/// How long to wait for all workers to connect.
const CONNECT_TIMEOUT: Duration = Duration::from_secs(60);

impl ProcessPool {
    /// Starts `workers` copies of `program` with `args` followed by
    /// `--socket <path>` and waits for each to connect.
    pub fn spawn(workers: usize, program: &Path, args: &[OsString]) -> io::Result<Self> {
        if workers == 0 {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "zero workers"));
        }
        let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_nanos());
        let socket = std::env::temp_dir().join(format!("denseinla-{}-{nanos}.sock", std::process::id()));
        let listener = UnixListener::bind(&socket)?;
        listener.set_nonblocking(true)?;
        let mut children = Vec::with_capacity(workers);
        for _ in 0..workers {
            let child = Command::new(program)
                .args(args)
                .arg("--socket")
                .arg(&socket)
                .stdin(Stdio::null())
                .stdout(Stdio::null())
                .spawn();
            match child {
                Ok(c) => children.push(c),
                Err(e) => {
                    kill_all(&mut children);
                    let _ = std::fs::remove_file(&socket);
                    return Err(e);
                }
            }
        }
        let deadline = Instant::now() + CONNECT_TIMEOUT;
        let mut streams = Vec::with_capacity(workers);
        while streams.len() < workers {
            match listener.accept() {
                Ok((s, _)) => {
                    s.set_nonblocking(false)?;
                    streams.push(s);
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    let dead = children.iter_mut().any(|c| matches!(c.try_wait(), Ok(Some(_))));
                    if dead || Instant::now() > deadline {
                        kill_all(&mut children);
                        let _ = std::fs::remove_file(&socket);
                        return Err(io::Error::other("worker process failed to connect"));
                    }
                    thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(e),
            }
        }
        let conns = children.into_iter().zip(streams).map(|(child, stream)| Mutex::new(Connection { child, stream })).collect();
        Ok(Self { conns, socket })
    }
}

fn kill_all(children: &mut [Child]) {
    for c in children {
        let _ = c.kill();
        let _ = c.wait();
    }
}

impl Executor for ProcessPool {
    fn workers(&self) -> usize {
        self.conns.len()
    }

    fn run(&self, batch: &TaskBatch, _eval: &dyn TaskEvaluator) -> Result<Vec<Vec<f64>>, ScheduleError> {
        let n = batch.len();
        let plan = assign(n, self.conns.len());
        let stage = batch.stage.code();
        let replies: Vec<Vec<(usize, Result<Vec<f64>, String>)>> = thread::scope(|scope| {
            let handles: Vec<_> = plan
                .iter()
                .zip(&self.conns)
                .filter(|(ids, _)| !ids.is_empty())
                .map(|(ids, conn)| {
                    scope.spawn(move || {
                        let mut conn = conn.lock().unwrap_or_else(|e| e.into_inner());
                        let mut out = Vec::with_capacity(ids.len());
                        for &id in ids {
                            let r = exchange(&mut conn.stream, id, stage, &batch.tasks[id]);
                            let failed = r.is_err();
                            out.push((id, r));
                            if failed {
                                break;
                            }
                        }
                        out
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap_or_default()).collect()
        });
        let mut slots: Vec<Slot> = vec![None; n];
        for (id, r) in replies.into_iter().flatten() {
            slots[id] = Some(r);
        }
        gather(slots)
    }
}

fn exchange(stream: &mut UnixStream, id: usize, stage: u8, payload: &[f64]) -> Result<Vec<f64>, String> {
    let request = Frame { task_id: id as u32, stage, values: payload.to_vec() };
    write_frame(stream, &request).map_err(|e| e.to_string())?;
    match read_frame(stream) {
        Ok(Some(f)) if f.is_failure() => Err(f.failure_message()),
        Ok(Some(f)) if f.task_id as usize == id => Ok(f.values),
        Ok(Some(f)) => Err(format!("reply for task {} while waiting for {id}", f.task_id)),
        Ok(None) => Err("worker closed the connection".into()),
        Err(e) => Err(e.to_string()),
    }
}

impl Drop for ProcessPool {
    fn drop(&mut self) {
        // streams are paired with children in accept order, not spawn
        // order, so every stream must be closed before any child is reaped
        for conn in &mut self.conns {
            let conn = conn.get_mut().unwrap_or_else(|e| e.into_inner());
            let _ = conn.stream.shutdown(std::net::Shutdown::Both);
        }
        for conn in &mut self.conns {
            let _ = conn.get_mut().unwrap_or_else(|e| e.into_inner()).child.wait();
        }
        let _ = std::fs::remove_file(&self.socket);
    }
}

/// Worker side: answers frames on `socket` until the master hangs up.
pub fn serve(socket: &Path, eval: &dyn TaskEvaluator) -> io::Result<()> {
    let mut stream = UnixStream::connect(socket)?;
    loop {
        let frame = match read_frame(&mut stream) {
            Ok(Some(f)) => f,
            Ok(None) => return Ok(()),
            Err(crate::wire::WireError::Io(e)) => return Err(e),
            Err(e) => return Err(io::Error::new(io::ErrorKind::InvalidData, e.to_string())),
        };
        let reply = match Stage::from_code(frame.stage) {
            Some(stage) => match eval.evaluate(stage, &frame.values) {
                Ok(values) => Frame { task_id: frame.task_id, stage: frame.stage, values },
                Err(msg) => Frame::failure(frame.task_id, &msg),
            },
            None => Frame::failure(frame.task_id, "unknown stage code"),
        };
        write_frame(&mut stream, &reply)?;
    }
}
